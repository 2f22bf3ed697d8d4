/**
 * Reverse-mode autodiff over dense float64 matrices.
 *
 * Every operation runs its forward pass immediately and, when a Tape is
 * supplied and any input carries a gradient buffer, pushes one backward
 * closure. Tape.backward walks the closures in reverse. There is no
 * broadcasting beyond the explicit row/scalar variants below; shapes are
 * checked on every call so a mismatch fails at the op that caused it.
 *
 * All loops fix their summation order, so repeated runs over the same
 * inputs produce bitwise-identical outputs.
 */

/** Dense row-major matrix. `grad` is null for constants. */
export class Mat {
  readonly rows: number;
  readonly cols: number;
  data: Float64Array;
  grad: Float64Array | null;

  constructor(rows: number, cols: number, data?: Float64Array, withGrad = false) {
    if (rows < 1 || cols < 1) throw new Error(`bad shape ${rows}x${cols}`);
    this.rows = rows;
    this.cols = cols;
    this.data = data ?? new Float64Array(rows * cols);
    if (data && data.length !== rows * cols) {
      throw new Error(`data length ${data.length} != ${rows}x${cols}`);
    }
    this.grad = withGrad ? new Float64Array(rows * cols) : null;
  }

  get size(): number {
    return this.rows * this.cols;
  }

  at(r: number, c: number): number {
    return this.data[r * this.cols + c];
  }

  zeroGrad(): void {
    if (this.grad) this.grad.fill(0);
  }
}

/** Trainable matrix: always carries a gradient buffer. */
export function param(rows: number, cols: number, data?: Float64Array): Mat {
  return new Mat(rows, cols, data, true);
}

/** Non-trainable matrix. */
export function constant(rows: number, cols: number, data?: Float64Array): Mat {
  return new Mat(rows, cols, data, false);
}

/** Records backward closures for one forward pass. */
export class Tape {
  private steps: Array<() => void> = [];

  push(step: () => void): void {
    this.steps.push(step);
  }

  /** Seed d(loss)/d(loss) = 1 and run all closures newest-first. */
  backward(loss: Mat): void {
    if (loss.rows !== 1 || loss.cols !== 1) {
      throw new Error(`backward expects a 1x1 loss, got ${loss.rows}x${loss.cols}`);
    }
    if (!loss.grad) throw new Error("loss has no gradient buffer");
    loss.grad[0] = 1;
    for (let i = this.steps.length - 1; i >= 0; i--) this.steps[i]();
  }
}

function out(tp: Tape | null, rows: number, cols: number, inputs: Mat[]): Mat {
  const needs = tp !== null && inputs.some((m) => m.grad !== null);
  return new Mat(rows, cols, undefined, needs);
}

function track(tp: Tape | null, result: Mat, step: () => void): void {
  if (result.grad && tp) tp.push(step);
}

/** C = A @ B. */
export function matmul(tp: Tape | null, a: Mat, b: Mat): Mat {
  if (a.cols !== b.rows) throw new Error(`matmul ${a.rows}x${a.cols} @ ${b.rows}x${b.cols}`);
  const c = out(tp, a.rows, b.cols, [a, b]);
  const n = b.cols;
  for (let i = 0; i < a.rows; i++) {
    for (let l = 0; l < a.cols; l++) {
      const av = a.data[i * a.cols + l];
      for (let j = 0; j < n; j++) c.data[i * n + j] += av * b.data[l * n + j];
    }
  }
  track(tp, c, () => {
    const g = c.grad!;
    if (a.grad) {
      for (let i = 0; i < a.rows; i++) {
        for (let l = 0; l < a.cols; l++) {
          let s = 0;
          for (let j = 0; j < n; j++) s += g[i * n + j] * b.data[l * n + j];
          a.grad[i * a.cols + l] += s;
        }
      }
    }
    if (b.grad) {
      for (let l = 0; l < a.cols; l++) {
        for (let i = 0; i < a.rows; i++) {
          const av = a.data[i * a.cols + l];
          for (let j = 0; j < n; j++) b.grad[l * n + j] += av * g[i * n + j];
        }
      }
    }
  });
  return c;
}

/** C = A @ B^T, for score matrices. */
export function matmulT(tp: Tape | null, a: Mat, b: Mat): Mat {
  if (a.cols !== b.cols) throw new Error(`matmulT ${a.rows}x${a.cols} vs ${b.rows}x${b.cols}`);
  const c = out(tp, a.rows, b.rows, [a, b]);
  const k = a.cols;
  for (let i = 0; i < a.rows; i++) {
    for (let j = 0; j < b.rows; j++) {
      let s = 0;
      for (let l = 0; l < k; l++) s += a.data[i * k + l] * b.data[j * k + l];
      c.data[i * b.rows + j] = s;
    }
  }
  track(tp, c, () => {
    const g = c.grad!;
    for (let i = 0; i < a.rows; i++) {
      for (let j = 0; j < b.rows; j++) {
        const gv = g[i * b.rows + j];
        if (a.grad) for (let l = 0; l < k; l++) a.grad[i * k + l] += gv * b.data[j * k + l];
        if (b.grad) for (let l = 0; l < k; l++) b.grad[j * k + l] += gv * a.data[i * k + l];
      }
    }
  });
  return c;
}

/** B = A^T. */
export function transpose(tp: Tape | null, a: Mat): Mat {
  const c = out(tp, a.cols, a.rows, [a]);
  for (let i = 0; i < a.rows; i++) {
    for (let j = 0; j < a.cols; j++) c.data[j * a.rows + i] = a.data[i * a.cols + j];
  }
  track(tp, c, () => {
    const g = c.grad!;
    for (let i = 0; i < a.rows; i++) {
      for (let j = 0; j < a.cols; j++) a.grad![i * a.cols + j] += g[j * a.rows + i];
    }
  });
  return c;
}

/** B = k * A for a fixed scalar k. */
export function scale(tp: Tape | null, a: Mat, k: number): Mat {
  const c = out(tp, a.rows, a.cols, [a]);
  for (let i = 0; i < a.size; i++) c.data[i] = k * a.data[i];
  track(tp, c, () => {
    for (let i = 0; i < a.size; i++) a.grad![i] += k * c.grad![i];
  });
  return c;
}

/** C = A + B, same shape. */
export function add(tp: Tape | null, a: Mat, b: Mat): Mat {
  if (a.rows !== b.rows || a.cols !== b.cols) {
    throw new Error(`add ${a.rows}x${a.cols} + ${b.rows}x${b.cols}`);
  }
  const c = out(tp, a.rows, a.cols, [a, b]);
  for (let i = 0; i < a.size; i++) c.data[i] = a.data[i] + b.data[i];
  track(tp, c, () => {
    const g = c.grad!;
    if (a.grad) for (let i = 0; i < a.size; i++) a.grad[i] += g[i];
    if (b.grad) for (let i = 0; i < a.size; i++) b.grad[i] += g[i];
  });
  return c;
}

/** C = A + v broadcast over rows; v is 1 x A.cols. */
export function addRow(tp: Tape | null, a: Mat, v: Mat): Mat {
  if (v.rows !== 1 || v.cols !== a.cols) {
    throw new Error(`addRow ${a.rows}x${a.cols} + ${v.rows}x${v.cols}`);
  }
  const c = out(tp, a.rows, a.cols, [a, v]);
  for (let i = 0; i < a.rows; i++) {
    for (let j = 0; j < a.cols; j++) c.data[i * a.cols + j] = a.data[i * a.cols + j] + v.data[j];
  }
  track(tp, c, () => {
    const g = c.grad!;
    if (a.grad) for (let i = 0; i < a.size; i++) a.grad[i] += g[i];
    if (v.grad) {
      for (let j = 0; j < a.cols; j++) {
        let s = 0;
        for (let i = 0; i < a.rows; i++) s += g[i * a.cols + j];
        v.grad[j] += s;
      }
    }
  });
  return c;
}

/** C = A + s broadcast everywhere; s is 1x1. */
export function addScalar(tp: Tape | null, a: Mat, s: Mat): Mat {
  if (s.rows !== 1 || s.cols !== 1) throw new Error("addScalar expects a 1x1 addend");
  const c = out(tp, a.rows, a.cols, [a, s]);
  const sv = s.data[0];
  for (let i = 0; i < a.size; i++) c.data[i] = a.data[i] + sv;
  track(tp, c, () => {
    const g = c.grad!;
    if (a.grad) for (let i = 0; i < a.size; i++) a.grad[i] += g[i];
    if (s.grad) {
      let acc = 0;
      for (let i = 0; i < a.size; i++) acc += g[i];
      s.grad[0] += acc;
    }
  });
  return c;
}

/** Elementwise max(x, 0). */
export function relu(tp: Tape | null, a: Mat): Mat {
  const c = out(tp, a.rows, a.cols, [a]);
  for (let i = 0; i < a.size; i++) c.data[i] = a.data[i] > 0 ? a.data[i] : 0;
  track(tp, c, () => {
    for (let i = 0; i < a.size; i++) if (a.data[i] > 0) a.grad![i] += c.grad![i];
  });
  return c;
}

const LN_EPS = 1e-5;

/** Row-wise layer norm with learnable gain/shift (1 x cols each). */
export function layerNormRows(tp: Tape | null, a: Mat, gamma: Mat, beta: Mat): Mat {
  const n = a.cols;
  if (gamma.rows !== 1 || gamma.cols !== n || beta.rows !== 1 || beta.cols !== n) {
    throw new Error("layerNormRows: gain/shift must be 1 x cols");
  }
  const c = out(tp, a.rows, n, [a, gamma, beta]);
  const xhat = new Float64Array(a.size);
  const sigma = new Float64Array(a.rows);
  for (let i = 0; i < a.rows; i++) {
    const off = i * n;
    let mu = 0;
    for (let j = 0; j < n; j++) mu += a.data[off + j];
    mu /= n;
    let va = 0;
    for (let j = 0; j < n; j++) {
      const d = a.data[off + j] - mu;
      va += d * d;
    }
    va /= n;
    const sg = Math.sqrt(va + LN_EPS);
    sigma[i] = sg;
    for (let j = 0; j < n; j++) {
      const xh = (a.data[off + j] - mu) / sg;
      xhat[off + j] = xh;
      c.data[off + j] = gamma.data[j] * xh + beta.data[j];
    }
  }
  track(tp, c, () => {
    const g = c.grad!;
    for (let i = 0; i < a.rows; i++) {
      const off = i * n;
      if (beta.grad) for (let j = 0; j < n; j++) beta.grad[j] += g[off + j];
      if (gamma.grad) for (let j = 0; j < n; j++) gamma.grad[j] += g[off + j] * xhat[off + j];
      if (a.grad) {
        let meanDx = 0;
        let meanDxXh = 0;
        for (let j = 0; j < n; j++) {
          const dxh = g[off + j] * gamma.data[j];
          meanDx += dxh;
          meanDxXh += dxh * xhat[off + j];
        }
        meanDx /= n;
        meanDxXh /= n;
        const inv = 1 / sigma[i];
        for (let j = 0; j < n; j++) {
          const dxh = g[off + j] * gamma.data[j];
          a.grad[off + j] += inv * (dxh - meanDx - xhat[off + j] * meanDxXh);
        }
      }
    }
  });
  return c;
}

/** Copy of columns [start, start+width). */
export function sliceCols(tp: Tape | null, a: Mat, start: number, width: number): Mat {
  if (start < 0 || width < 1 || start + width > a.cols) {
    throw new Error(`sliceCols [${start}, ${start + width}) of ${a.cols}`);
  }
  const c = out(tp, a.rows, width, [a]);
  for (let i = 0; i < a.rows; i++) {
    for (let j = 0; j < width; j++) c.data[i * width + j] = a.data[i * a.cols + start + j];
  }
  track(tp, c, () => {
    const g = c.grad!;
    for (let i = 0; i < a.rows; i++) {
      for (let j = 0; j < width; j++) a.grad![i * a.cols + start + j] += g[i * width + j];
    }
  });
  return c;
}

/** Copy of rows [start, start+count). */
export function sliceRows(tp: Tape | null, a: Mat, start: number, count: number): Mat {
  if (start < 0 || count < 1 || start + count > a.rows) {
    throw new Error(`sliceRows [${start}, ${start + count}) of ${a.rows}`);
  }
  const c = out(tp, count, a.cols, [a]);
  c.data.set(a.data.subarray(start * a.cols, (start + count) * a.cols));
  track(tp, c, () => {
    const g = c.grad!;
    const off = start * a.cols;
    for (let i = 0; i < g.length; i++) a.grad![off + i] += g[i];
  });
  return c;
}

/** Horizontal concatenation; all inputs share a row count. */
export function concatCols(tp: Tape | null, mats: Mat[]): Mat {
  if (mats.length === 0) throw new Error("concatCols of nothing");
  const rows = mats[0].rows;
  let cols = 0;
  for (const m of mats) {
    if (m.rows !== rows) throw new Error("concatCols: row counts differ");
    cols += m.cols;
  }
  const c = out(tp, rows, cols, mats);
  let at = 0;
  for (const m of mats) {
    for (let i = 0; i < rows; i++) {
      for (let j = 0; j < m.cols; j++) c.data[i * cols + at + j] = m.data[i * m.cols + j];
    }
    at += m.cols;
  }
  track(tp, c, () => {
    const g = c.grad!;
    let base = 0;
    for (const m of mats) {
      if (m.grad) {
        for (let i = 0; i < rows; i++) {
          for (let j = 0; j < m.cols; j++) m.grad[i * m.cols + j] += g[i * cols + base + j];
        }
      }
      base += m.cols;
    }
  });
  return c;
}

/**
 * Gather one table row into a matrix: result[i] = table[row, idx[i]],
 * with idx[i] < 0 meaning "no entry" (emits 0.0). Gradients scatter-add
 * back into the table, so shared buckets accumulate.
 */
export function gatherTableRow(
  tp: Tape | null,
  table: Mat,
  row: number,
  idx: Int32Array,
  rows: number,
  cols: number,
): Mat {
  if (row < 0 || row >= table.rows) throw new Error(`table row ${row} of ${table.rows}`);
  if (idx.length !== rows * cols) throw new Error("gatherTableRow: index shape mismatch");
  const c = out(tp, rows, cols, [table]);
  const base = row * table.cols;
  for (let i = 0; i < idx.length; i++) {
    const b = idx[i];
    if (b >= table.cols) throw new Error(`bucket ${b} out of range ${table.cols}`);
    c.data[i] = b >= 0 ? table.data[base + b] : 0;
  }
  track(tp, c, () => {
    const g = c.grad!;
    for (let i = 0; i < idx.length; i++) {
      if (idx[i] >= 0) table.grad![base + idx[i]] += g[i];
    }
  });
  return c;
}

/**
 * Row-wise softmax restricted to entries with keep[i] == 1. Dropped
 * entries get weight 0.0; a fully dropped row becomes all zeros rather
 * than NaN so padding query rows stay inert.
 */
export function maskedSoftmaxRows(tp: Tape | null, s: Mat, keep: Uint8Array): Mat {
  if (keep.length !== s.size) throw new Error("maskedSoftmaxRows: mask shape mismatch");
  const c = out(tp, s.rows, s.cols, [s]);
  const n = s.cols;
  for (let i = 0; i < s.rows; i++) {
    const off = i * n;
    let m = -Infinity;
    for (let j = 0; j < n; j++) if (keep[off + j] && s.data[off + j] > m) m = s.data[off + j];
    if (m === -Infinity) continue;
    let z = 0;
    for (let j = 0; j < n; j++) {
      if (keep[off + j]) {
        const e = Math.exp(s.data[off + j] - m);
        c.data[off + j] = e;
        z += e;
      }
    }
    for (let j = 0; j < n; j++) if (keep[off + j]) c.data[off + j] /= z;
  }
  track(tp, c, () => {
    const g = c.grad!;
    for (let i = 0; i < s.rows; i++) {
      const off = i * n;
      let dot = 0;
      for (let j = 0; j < n; j++) if (keep[off + j]) dot += g[off + j] * c.data[off + j];
      for (let j = 0; j < n; j++) {
        if (keep[off + j]) s.grad![off + j] += c.data[off + j] * (g[off + j] - dot);
      }
    }
  });
  return c;
}

/** Elementwise product with a fixed (non-learnable) mask, e.g. dropout. */
export function mulMask(tp: Tape | null, a: Mat, mask: Float64Array): Mat {
  if (mask.length !== a.size) throw new Error("mulMask: mask shape mismatch");
  const c = out(tp, a.rows, a.cols, [a]);
  for (let i = 0; i < a.size; i++) c.data[i] = a.data[i] * mask[i];
  track(tp, c, () => {
    for (let i = 0; i < a.size; i++) a.grad![i] += c.grad![i] * mask[i];
  });
  return c;
}

/** Keep rows with keep[i] == 1, overwrite the rest with exact 0.0. */
export function zeroRows(tp: Tape | null, a: Mat, keep: Uint8Array): Mat {
  if (keep.length !== a.rows) throw new Error("zeroRows: mask length != rows");
  const c = out(tp, a.rows, a.cols, [a]);
  for (let i = 0; i < a.rows; i++) {
    if (keep[i]) {
      const off = i * a.cols;
      for (let j = 0; j < a.cols; j++) c.data[off + j] = a.data[off + j];
    }
  }
  track(tp, c, () => {
    const g = c.grad!;
    for (let i = 0; i < a.rows; i++) {
      if (keep[i]) {
        const off = i * a.cols;
        for (let j = 0; j < a.cols; j++) a.grad![off + j] += g[off + j];
      }
    }
  });
  return c;
}

/** C = A with v (1 x cols) added into each listed row. */
export function addAtRows(tp: Tape | null, a: Mat, v: Mat, rows: number[]): Mat {
  if (v.rows !== 1 || v.cols !== a.cols) throw new Error("addAtRows: addend must be 1 x cols");
  const c = out(tp, a.rows, a.cols, [a, v]);
  c.data.set(a.data);
  for (const r of rows) {
    if (r < 0 || r >= a.rows) throw new Error(`row ${r} out of range`);
    const off = r * a.cols;
    for (let j = 0; j < a.cols; j++) c.data[off + j] += v.data[j];
  }
  track(tp, c, () => {
    const g = c.grad!;
    if (a.grad) for (let i = 0; i < a.size; i++) a.grad[i] += g[i];
    if (v.grad) {
      for (const r of rows) {
        const off = r * a.cols;
        for (let j = 0; j < a.cols; j++) v.grad[j] += g[off + j];
      }
    }
  });
  return c;
}

/** Cross-entropy of one logit row against an integer label, as a 1x1 mat. */
export function rowCeLoss(tp: Tape | null, logits: Mat, label: number): Mat {
  if (logits.rows !== 1) throw new Error("rowCeLoss expects a single row");
  const cN = logits.cols;
  if (!Number.isInteger(label) || label < 0 || label >= cN) {
    throw new Error(`label ${label} out of range for ${cN} classes`);
  }
  const c = out(tp, 1, 1, [logits]);
  let m = -Infinity;
  for (let j = 0; j < cN; j++) if (logits.data[j] > m) m = logits.data[j];
  let z = 0;
  for (let j = 0; j < cN; j++) z += Math.exp(logits.data[j] - m);
  const lse = m + Math.log(z);
  c.data[0] = lse - logits.data[label];
  track(tp, c, () => {
    const g = c.grad![0];
    for (let j = 0; j < cN; j++) {
      const p = Math.exp(logits.data[j] - lse);
      logits.grad![j] += g * (p - (j === label ? 1 : 0));
    }
  });
  return c;
}

/** Sum of 1x1 mats, for accumulating per-node losses. */
export function sumMats(tp: Tape | null, mats: Mat[]): Mat {
  if (mats.length === 0) throw new Error("sumMats of nothing");
  for (const m of mats) {
    if (m.rows !== 1 || m.cols !== 1) throw new Error("sumMats expects 1x1 inputs");
  }
  const c = out(tp, 1, 1, mats);
  let s = 0;
  for (const m of mats) s += m.data[0];
  c.data[0] = s;
  track(tp, c, () => {
    const g = c.grad![0];
    for (const m of mats) if (m.grad) m.grad[0] += g;
  });
  return c;
}

import { expect } from "vitest";

import { Rand } from "../src/rng.js";
import { Mat, Tape, constant, matmul, mulMask } from "../src/tensor.js";

/** Fill a matrix with seeded uniform values in [-half, half]. */
export function randFill(m: Mat, rng: Rand, half = 0.5): void {
  for (let i = 0; i < m.size; i++) m.data[i] = rng.uniform(-half, half);
}

/** Reduce a matrix to 1x1 with fixed weights, so sensitivities differ per entry. */
export function weightedSum(tp: Tape | null, m: Mat, weights: Float64Array): Mat {
  const weighted = mulMask(tp, m, weights);
  const left = constant(1, m.rows);
  left.data.fill(1);
  const right = constant(m.cols, 1);
  right.data.fill(1);
  return matmul(tp, matmul(tp, left, weighted), right);
}

/**
 * Central-difference check of d(loss)/d(param) for every entry of every
 * listed parameter. `forward` must rebuild the loss from scratch on each
 * call (it runs with a null tape for the difference quotients).
 */
export function expectGradMatchesFd(
  params: Mat[],
  forward: (tp: Tape | null) => Mat,
  eps = 1e-6,
  tol = 1e-6,
): void {
  for (const p of params) p.zeroGrad();
  const tape = new Tape();
  const loss = forward(tape);
  tape.backward(loss);
  const analytic = params.map((p) => p.grad!.slice());

  params.forEach((p, k) => {
    for (let i = 0; i < p.size; i++) {
      const keep = p.data[i];
      p.data[i] = keep + eps;
      const up = forward(null).data[0];
      p.data[i] = keep - eps;
      const down = forward(null).data[0];
      p.data[i] = keep;
      const fd = (up - down) / (2 * eps);
      const got = analytic[k][i];
      const denom = Math.max(Math.abs(fd), Math.abs(got), 1e-8);
      expect(Math.abs(fd - got) / denom, `param ${k} entry ${i}: fd=${fd} analytic=${got}`).toBeLessThan(
        tol,
      );
    }
  });
}

/** Bitwise equality for float arrays (distinguishes -0 from +0, NaN fails). */
export function expectBitEqual(a: Float64Array, b: Float64Array): void {
  expect(a.length).toBe(b.length);
  for (let i = 0; i < a.length; i++) {
    expect(Object.is(a[i], b[i]), `index ${i}: ${a[i]} vs ${b[i]}`).toBe(true);
  }
}

/** Elementwise closeness with a relative-or-absolute tolerance. */
export function expectAllClose(a: Float64Array, b: Float64Array, tol = 1e-10): void {
  expect(a.length).toBe(b.length);
  for (let i = 0; i < a.length; i++) {
    const denom = Math.max(Math.abs(a[i]), Math.abs(b[i]), 1);
    expect(Math.abs(a[i] - b[i]) / denom, `index ${i}: ${a[i]} vs ${b[i]}`).toBeLessThan(tol);
  }
}

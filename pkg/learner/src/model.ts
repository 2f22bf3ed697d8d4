/**
 * Transformer node classifier over bundle token sequences.
 *
 * Each node is classified from its fixed-length token row: slot features
 * are projected into the hidden space, attention scores take an additive
 * learnable bias looked up from the pairwise distance codes, and a final
 * attention readout aggregates the sequence back onto the ego slot.
 *
 * Distance codes bucket as 0..dMax exact, one CLAMP bucket for anything
 * finite beyond dMax, and one INF bucket for the infinite code used by
 * virtual-slot pairs and disconnected pairs. The MASK code is not a
 * bucket: masked pairs are removed from the softmax entirely.
 */
import {
  BIAS_FINITE_MAX,
  BIAS_INF,
  BIAS_MASK,
  Bundle,
  TOKEN_PAD,
  TOKEN_VIRTUAL,
} from "./bundle.js";
import { Rand } from "./rng.js";
import {
  Mat,
  Tape,
  add,
  addAtRows,
  addRow,
  addScalar,
  concatCols,
  constant,
  gatherTableRow,
  layerNormRows,
  maskedSoftmaxRows,
  matmul,
  matmulT,
  mulMask,
  param,
  relu,
  rowCeLoss,
  scale,
  sliceCols,
  sliceRows,
  sumMats,
  transpose,
  zeroRows,
} from "./tensor.js";

export const KIND_REAL = 0;
export const KIND_VIRTUAL = 1;
export const KIND_PAD = 2;

export interface ModelConfig {
  layers: number;
  heads: number;
  hidden: number;
  ffnMult: number;
  inputDropout: number;
  hiddenDropout: number;
  lr: number;
  weightDecay: number;
  epochs: number;
  batchSize: number;
  dMax: number;
  patience: number;
  seed: number;
  spdBias: boolean;
  virtualNode: boolean;
  attentiveReadout: boolean;
  sharedBias: boolean;
  readoutIncludeEgo: boolean;
  readoutIncludeVirtual: boolean;
}

export function defaultConfig(): ModelConfig {
  return {
    layers: 4,
    heads: 8,
    hidden: 128,
    ffnMult: 4,
    inputDropout: 0.1,
    hiddenDropout: 0.5,
    lr: 1e-4,
    weightDecay: 0,
    epochs: 500,
    batchSize: 64,
    dMax: 16,
    patience: 50,
    seed: 42,
    spdBias: true,
    virtualNode: true,
    attentiveReadout: true,
    sharedBias: false,
    readoutIncludeEgo: true,
    readoutIncludeVirtual: true,
  };
}

export function validateConfig(cfg: ModelConfig): void {
  const positiveInts: Array<[string, number]> = [
    ["layers", cfg.layers],
    ["heads", cfg.heads],
    ["hidden", cfg.hidden],
    ["ffnMult", cfg.ffnMult],
    ["epochs", cfg.epochs],
    ["batchSize", cfg.batchSize],
    ["dMax", cfg.dMax],
    ["patience", cfg.patience],
  ];
  for (const [name, v] of positiveInts) {
    if (!Number.isInteger(v) || v < 1) throw new Error(`${name} must be a positive integer`);
  }
  if (cfg.hidden % cfg.heads !== 0) {
    throw new Error(`hidden=${cfg.hidden} not divisible by heads=${cfg.heads}`);
  }
  for (const [name, v] of [
    ["inputDropout", cfg.inputDropout],
    ["hiddenDropout", cfg.hiddenDropout],
  ] as const) {
    if (!(v >= 0 && v < 1)) throw new Error(`${name} must be in [0, 1)`);
  }
  if (!(cfg.lr > 0)) throw new Error("lr must be positive");
  if (!(cfg.weightDecay >= 0)) throw new Error("weightDecay must be non-negative");
  if (!Number.isInteger(cfg.seed) || cfg.seed < 0) throw new Error("seed must be a non-negative integer");
}

/** Bucket index for a distance code, or -1 for the hard mask. */
export function bucketOfCode(code: number, dMax: number): number {
  if (code === BIAS_MASK) return -1;
  if (code === BIAS_INF) return dMax + 2;
  if (code > BIAS_FINITE_MAX) throw new Error(`code ${code} in the reserved range`);
  return code <= dMax ? code : dMax + 1;
}

/** One node's gathered inputs; produced by pure indexing into the bundle. */
export interface NodeItem {
  node: number;
  label: number;
  egoSlot: number;
  /** Per-slot kind: real / virtual / pad. */
  kinds: Int8Array;
  /** tokenLen x width feature rows; zeros at non-real slots. */
  feats: Float64Array;
  /** tokenLen x tokenLen bias bucket per pair, -1 where masked. */
  buckets: Int32Array;
  /** tokenLen x tokenLen attention mask, 1 = attend. */
  keep: Uint8Array;
  /** Readout participation per slot. */
  participants: Uint8Array;
}

/** Gather one node's batch item. Indexing only: no traversal, no copies of the bundle. */
export function gatherNode(bundle: Bundle, cfg: ModelConfig, node: number): NodeItem {
  const t = bundle.tokenLen;
  const w = bundle.featureWidth;
  if (node < 0 || node >= bundle.n) throw new Error(`node ${node} out of range`);

  const kinds = new Int8Array(t);
  let egoSlot = -1;
  for (let i = 0; i < t; i++) {
    const slot = bundle.tokens[node * t + i];
    if (slot === TOKEN_PAD) kinds[i] = KIND_PAD;
    else if (slot === TOKEN_VIRTUAL) kinds[i] = cfg.virtualNode ? KIND_VIRTUAL : KIND_PAD;
    else {
      kinds[i] = KIND_REAL;
      if (egoSlot < 0) egoSlot = i;
    }
  }
  if (egoSlot < 0) throw new Error(`node ${node}: token row has no real slot`);

  const feats = new Float64Array(t * w);
  for (let i = 0; i < t; i++) {
    if (kinds[i] !== KIND_REAL) continue;
    const u = bundle.tokens[node * t + i];
    for (let j = 0; j < w; j++) feats[i * w + j] = bundle.features[u * w + j];
  }

  const keep = new Uint8Array(t * t);
  const buckets = new Int32Array(t * t).fill(-1);
  const base = node * t * t;
  for (let i = 0; i < t; i++) {
    for (let j = 0; j < t; j++) {
      if (kinds[i] === KIND_PAD || kinds[j] === KIND_PAD) continue;
      const code = bundle.bias[base + i * t + j];
      if (code === BIAS_MASK) continue;
      keep[i * t + j] = 1;
      buckets[i * t + j] = bucketOfCode(code, cfg.dMax);
    }
  }

  const participants = new Uint8Array(t);
  for (let j = 0; j < t; j++) {
    if (kinds[j] === KIND_PAD) continue;
    if (kinds[j] === KIND_VIRTUAL && !cfg.readoutIncludeVirtual) continue;
    if (j === egoSlot && !cfg.readoutIncludeEgo) continue;
    participants[j] = 1;
  }

  return {
    node,
    label: bundle.classes[node],
    egoSlot,
    kinds,
    feats,
    buckets,
    keep,
    participants,
  };
}

/** Gather every node of one split (0 train, 1 valid, 2 test). */
export function gatherSplit(bundle: Bundle, cfg: ModelConfig, split: number): NodeItem[] {
  const items: NodeItem[] = [];
  for (let v = 0; v < bundle.n; v++) {
    if (bundle.splits[v] === split) items.push(gatherNode(bundle, cfg, v));
  }
  return items;
}

interface LayerParams {
  wq: Mat;
  wk: Mat;
  wv: Mat;
  wo: Mat;
  ln1g: Mat;
  ln1b: Mat;
  ln2g: Mat;
  ln2b: Mat;
  fw1: Mat;
  fb1: Mat;
  fw2: Mat;
  fb2: Mat;
}

function fanInInit(m: Mat, fanIn: number, rng: Rand): void {
  const bound = 1 / Math.sqrt(fanIn);
  for (let i = 0; i < m.size; i++) m.data[i] = rng.uniform(-bound, bound);
}

function dropoutMask(rng: Rand, size: number, p: number): Float64Array {
  const m = new Float64Array(size);
  const keepScale = 1 / (1 - p);
  for (let i = 0; i < size; i++) m[i] = rng.next() < p ? 0 : keepScale;
  return m;
}

function linear(tp: Tape | null, x: Mat, w: Mat, b: Mat): Mat {
  return addRow(tp, matmul(tp, x, w), b);
}

export class Model {
  readonly cfg: ModelConfig;
  readonly featureWidth: number;
  readonly numClasses: number;

  mlpxW1: Mat;
  mlpxB1: Mat;
  mlpxW2: Mat;
  mlpxB2: Mat;
  layers: LayerParams[] = [];
  we: Mat;
  mlpzW1: Mat;
  mlpzB1: Mat;
  mlpzW2: Mat;
  mlpzB2: Mat;
  biasTable: Mat;
  virtualAttr: Mat;

  constructor(cfg: ModelConfig, featureWidth: number, numClasses: number) {
    validateConfig(cfg);
    if (featureWidth < 1 || numClasses < 1) throw new Error("need features and classes");
    this.cfg = cfg;
    this.featureWidth = featureWidth;
    this.numClasses = numClasses;

    const F = cfg.hidden;
    const ff = F * cfg.ffnMult;
    const rng = new Rand(cfg.seed);

    this.mlpxW1 = param(featureWidth, F);
    fanInInit(this.mlpxW1, featureWidth, rng);
    this.mlpxB1 = param(1, F);
    this.mlpxW2 = param(F, F);
    fanInInit(this.mlpxW2, F, rng);
    this.mlpxB2 = param(1, F);

    for (let l = 0; l < cfg.layers; l++) {
      const lp: LayerParams = {
        wq: param(F, F),
        wk: param(F, F),
        wv: param(F, F),
        wo: param(F, F),
        ln1g: param(1, F),
        ln1b: param(1, F),
        ln2g: param(1, F),
        ln2b: param(1, F),
        fw1: param(F, ff),
        fb1: param(1, ff),
        fw2: param(ff, F),
        fb2: param(1, F),
      };
      fanInInit(lp.wq, F, rng);
      fanInInit(lp.wk, F, rng);
      fanInInit(lp.wv, F, rng);
      fanInInit(lp.wo, F, rng);
      lp.ln1g.data.fill(1);
      lp.ln2g.data.fill(1);
      fanInInit(lp.fw1, F, rng);
      fanInInit(lp.fw2, ff, rng);
      this.layers.push(lp);
    }

    this.we = param(2 * F, 1);
    fanInInit(this.we, 2 * F, rng);
    this.mlpzW1 = param(F, F);
    fanInInit(this.mlpzW1, F, rng);
    this.mlpzB1 = param(1, F);
    this.mlpzW2 = param(F, numClasses);
    fanInInit(this.mlpzW2, F, rng);
    this.mlpzB2 = param(1, numClasses);

    // Bias buckets start neutral (plain attention) and learn from there.
    this.biasTable = param(cfg.sharedBias ? 1 : cfg.heads, cfg.dMax + 3);
    this.virtualAttr = param(1, F);
    fanInInit(this.virtualAttr, F, rng);
  }

  /** Named parameter list in a fixed order. */
  paramGroups(): Array<{ name: string; mat: Mat }> {
    const groups: Array<{ name: string; mat: Mat }> = [
      { name: "mlp_x.w1", mat: this.mlpxW1 },
      { name: "mlp_x.b1", mat: this.mlpxB1 },
      { name: "mlp_x.w2", mat: this.mlpxW2 },
      { name: "mlp_x.b2", mat: this.mlpxB2 },
    ];
    this.layers.forEach((lp, l) => {
      groups.push(
        { name: `layer${l}.wq`, mat: lp.wq },
        { name: `layer${l}.wk`, mat: lp.wk },
        { name: `layer${l}.wv`, mat: lp.wv },
        { name: `layer${l}.wo`, mat: lp.wo },
        { name: `layer${l}.ln1.gain`, mat: lp.ln1g },
        { name: `layer${l}.ln1.shift`, mat: lp.ln1b },
        { name: `layer${l}.ln2.gain`, mat: lp.ln2g },
        { name: `layer${l}.ln2.shift`, mat: lp.ln2b },
        { name: `layer${l}.ffn.w1`, mat: lp.fw1 },
        { name: `layer${l}.ffn.b1`, mat: lp.fb1 },
        { name: `layer${l}.ffn.w2`, mat: lp.fw2 },
        { name: `layer${l}.ffn.b2`, mat: lp.fb2 },
      );
    });
    groups.push(
      { name: "readout.we", mat: this.we },
      { name: "mlp_z.w1", mat: this.mlpzW1 },
      { name: "mlp_z.b1", mat: this.mlpzB1 },
      { name: "mlp_z.w2", mat: this.mlpzW2 },
      { name: "mlp_z.b2", mat: this.mlpzB2 },
      { name: "bias.table", mat: this.biasTable },
      { name: "virtual.attr", mat: this.virtualAttr },
    );
    return groups;
  }

  zeroGrad(): void {
    for (const g of this.paramGroups()) g.mat.zeroGrad();
  }

  /**
   * Token embeddings: real slots through the feature projection, virtual
   * slots from the learnable attribute, pad slots exactly zero.
   */
  embed(tp: Tape | null, item: NodeItem, train: boolean, rng: Rand | null): Mat {
    const cfg = this.cfg;
    const t = item.kinds.length;
    let x = constant(t, this.featureWidth, item.feats);
    if (train && cfg.inputDropout > 0) {
      x = mulMask(tp, x, dropoutMask(rng!, x.size, cfg.inputDropout));
    }
    const projected = linear(tp, relu(tp, linear(tp, x, this.mlpxW1, this.mlpxB1)), this.mlpxW2, this.mlpxB2);
    const realRows = new Uint8Array(t);
    const virtualRows: number[] = [];
    for (let i = 0; i < t; i++) {
      if (item.kinds[i] === KIND_REAL) realRows[i] = 1;
      else if (item.kinds[i] === KIND_VIRTUAL) virtualRows.push(i);
    }
    let h = zeroRows(tp, projected, realRows);
    if (virtualRows.length > 0) h = addAtRows(tp, h, this.virtualAttr, virtualRows);
    return h;
  }

  /** One pre-norm transformer layer. */
  layerForward(
    tp: Tape | null,
    h: Mat,
    item: NodeItem,
    l: number,
    train: boolean,
    rng: Rand | null,
  ): Mat {
    const cfg = this.cfg;
    const lp = this.layers[l];
    const t = h.rows;
    const F = cfg.hidden;
    const dk = F / cfg.heads;
    const invSqrt = 1 / Math.sqrt(dk);

    const xn = layerNormRows(tp, h, lp.ln1g, lp.ln1b);
    const q = matmul(tp, xn, lp.wq);
    const k = matmul(tp, xn, lp.wk);
    const v = matmul(tp, xn, lp.wv);
    const headOuts: Mat[] = [];
    for (let head = 0; head < cfg.heads; head++) {
      const qh = sliceCols(tp, q, head * dk, dk);
      const kh = sliceCols(tp, k, head * dk, dk);
      let s = scale(tp, matmulT(tp, qh, kh), invSqrt);
      if (cfg.spdBias) {
        const row = cfg.sharedBias ? 0 : head;
        let b = gatherTableRow(tp, this.biasTable, row, item.buckets, t, t);
        if (train && cfg.inputDropout > 0) {
          b = mulMask(tp, b, dropoutMask(rng!, b.size, cfg.inputDropout));
        }
        s = add(tp, s, b);
      }
      const weights = maskedSoftmaxRows(tp, s, item.keep);
      headOuts.push(matmul(tp, weights, sliceCols(tp, v, head * dk, dk)));
    }
    let att = matmul(tp, headOuts.length === 1 ? headOuts[0] : concatCols(tp, headOuts), lp.wo);
    if (train && cfg.hiddenDropout > 0) {
      att = mulMask(tp, att, dropoutMask(rng!, att.size, cfg.hiddenDropout));
    }
    let out = add(tp, h, att);

    const x2 = layerNormRows(tp, out, lp.ln2g, lp.ln2b);
    let ff = linear(tp, relu(tp, linear(tp, x2, lp.fw1, lp.fb1)), lp.fw2, lp.fb2);
    if (train && cfg.hiddenDropout > 0) {
      ff = mulMask(tp, ff, dropoutMask(rng!, ff.size, cfg.hiddenDropout));
    }
    return add(tp, out, ff);
  }

  /** Ego-centered readout: attention weights over participating slots. */
  readout(tp: Tape | null, h: Mat, item: NodeItem): Mat {
    const cfg = this.cfg;
    const F = cfg.hidden;
    const t = h.rows;
    const hv = sliceRows(tp, h, item.egoSlot, 1);
    let scores: Mat;
    if (cfg.attentiveReadout) {
      const egoHalf = sliceRows(tp, this.we, 0, F);
      const slotHalf = sliceRows(tp, this.we, F, F);
      const egoTerm = matmul(tp, hv, egoHalf);
      scores = addScalar(tp, transpose(tp, matmul(tp, h, slotHalf)), egoTerm);
    } else {
      scores = constant(1, t);
    }
    const alpha = maskedSoftmaxRows(tp, scores, item.participants);
    const agg = matmul(tp, alpha, h);
    const z = add(tp, hv, agg);
    return linear(tp, relu(tp, linear(tp, z, this.mlpzW1, this.mlpzB1)), this.mlpzW2, this.mlpzB2);
  }

  /** Logits (1 x classes) for one node. */
  forwardNode(tp: Tape | null, item: NodeItem, train = false, rng: Rand | null = null): Mat {
    if (train && (this.cfg.inputDropout > 0 || this.cfg.hiddenDropout > 0) && !rng) {
      throw new Error("training forward with dropout needs an rng");
    }
    let h = this.embed(tp, item, train, rng);
    for (let l = 0; l < this.cfg.layers; l++) {
      h = this.layerForward(tp, h, item, l, train, rng);
    }
    return this.readout(tp, h, item);
  }

  /** Mean cross-entropy over a batch of items. */
  meanLoss(tp: Tape | null, items: NodeItem[], train = false, rng: Rand | null = null): Mat {
    const losses = items.map((item) =>
      rowCeLoss(tp, this.forwardNode(tp, item, train, rng), item.label),
    );
    return scale(tp, sumMats(tp, losses), 1 / items.length);
  }
}

export interface CheckpointMeta {
  bestEpoch: number;
  validAccuracy: number;
}

/** Serialize config plus every parameter group to JSON. */
export function checkpointJson(model: Model, meta: CheckpointMeta): string {
  const params: Record<string, number[]> = {};
  for (const { name, mat } of model.paramGroups()) params[name] = Array.from(mat.data);
  return JSON.stringify(
    {
      format: "hoplearn-checkpoint-1",
      config: model.cfg,
      featureWidth: model.featureWidth,
      numClasses: model.numClasses,
      meta,
      params,
    },
    null,
    1,
  );
}

/** Rebuild a model from checkpoint JSON. */
export function modelFromCheckpoint(text: string): { model: Model; meta: CheckpointMeta } {
  let doc: any;
  try {
    doc = JSON.parse(text);
  } catch {
    throw new Error("checkpoint is not valid JSON");
  }
  if (doc?.format !== "hoplearn-checkpoint-1") throw new Error("unrecognized checkpoint format");
  const model = new Model(doc.config as ModelConfig, doc.featureWidth, doc.numClasses);
  for (const { name, mat } of model.paramGroups()) {
    const stored = doc.params?.[name];
    if (!Array.isArray(stored) || stored.length !== mat.size) {
      throw new Error(`checkpoint parameter ${name} missing or mis-sized`);
    }
    mat.data.set(stored);
  }
  const meta: CheckpointMeta = {
    bestEpoch: Number(doc.meta?.bestEpoch ?? -1),
    validAccuracy: Number(doc.meta?.validAccuracy ?? NaN),
  };
  return { model, meta };
}

import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { BIAS_INF, BIAS_MASK, loadBundle } from "../src/bundle.js";
import {
  KIND_PAD,
  KIND_REAL,
  KIND_VIRTUAL,
  Model,
  ModelConfig,
  NodeItem,
  bucketOfCode,
  checkpointJson,
  defaultConfig,
  gatherNode,
  gatherSplit,
  modelFromCheckpoint,
  validateConfig,
} from "../src/model.js";
import { Rand } from "../src/rng.js";
import { addRow, constant, matmul, relu } from "../src/tensor.js";
import { expectAllClose, expectBitEqual, randFill } from "./helpers.js";

const PATH3 = fileURLToPath(new URL("../fixtures/path3", import.meta.url));
const TWOHUB = fileURLToPath(new URL("../fixtures/twohub", import.meta.url));

const path3 = loadBundle(PATH3);
const twohub = loadBundle(TWOHUB);

function smallCfg(overrides: Partial<ModelConfig> = {}): ModelConfig {
  return {
    ...defaultConfig(),
    layers: 2,
    heads: 2,
    hidden: 16,
    ffnMult: 2,
    seed: 11,
    ...overrides,
  };
}

function randomizeParams(model: Model, seed: number): void {
  const rng = new Rand(seed);
  for (const g of model.paramGroups()) randFill(g.mat, rng, 0.4);
}

function cloneItem(item: NodeItem): NodeItem {
  return {
    node: item.node,
    label: item.label,
    egoSlot: item.egoSlot,
    kinds: item.kinds.slice(),
    feats: item.feats.slice(),
    buckets: item.buckets.slice(),
    keep: item.keep.slice(),
    participants: item.participants.slice(),
  };
}

describe("bucketOfCode", () => {
  const dMax = 16;

  it("keeps exact distances, clamps long ones, buckets the infinite code", () => {
    for (let d = 0; d <= dMax; d++) expect(bucketOfCode(d, dMax)).toBe(d);
    expect(bucketOfCode(17, dMax)).toBe(dMax + 1);
    expect(bucketOfCode(0xfff0, dMax)).toBe(dMax + 1);
    expect(bucketOfCode(BIAS_INF, dMax)).toBe(dMax + 2);
  });

  it("maps the hard mask to -1 and rejects reserved codes", () => {
    expect(bucketOfCode(BIAS_MASK, dMax)).toBe(-1);
    expect(() => bucketOfCode(0xfff1, dMax)).toThrow(/reserved/);
  });
});

describe("validateConfig", () => {
  it("accepts the defaults", () => {
    expect(() => validateConfig(defaultConfig())).not.toThrow();
  });

  it("rejects a head count that does not divide the width", () => {
    expect(() => validateConfig(smallCfg({ hidden: 18, heads: 4 }))).toThrow(/divisible/);
  });

  it("rejects out-of-range dropout, lr, and seed", () => {
    expect(() => validateConfig(smallCfg({ hiddenDropout: 1 }))).toThrow(/\[0, 1\)/);
    expect(() => validateConfig(smallCfg({ lr: 0 }))).toThrow(/lr/);
    expect(() => validateConfig(smallCfg({ seed: -3 }))).toThrow(/seed/);
  });
});

describe("gatherNode on the 3-node fixture", () => {
  it("produces kinds, features, buckets, and masks for the hub node", () => {
    const cfg = smallCfg();
    const item = gatherNode(path3, cfg, 0);
    expect(item.label).toBe(1);
    expect(item.egoSlot).toBe(1);
    expect(Array.from(item.kinds)).toEqual([
      KIND_VIRTUAL, KIND_REAL, KIND_REAL, KIND_REAL, KIND_PAD,
    ]);
    const w = path3.featureWidth;
    expect(Array.from(item.feats.slice(1 * w, 2 * w))).toEqual([3, 4]);
    expect(Array.from(item.feats.slice(2 * w, 3 * w))).toEqual([1, 2]);
    expect(Array.from(item.feats.slice(3 * w, 4 * w))).toEqual([5, 6]);
    expect(Array.from(item.feats.slice(0, w))).toEqual([0, 0]);
    expect(Array.from(item.feats.slice(4 * w, 5 * w))).toEqual([0, 0]);

    const inf = cfg.dMax + 2;
    expect(Array.from(item.buckets)).toEqual([
      inf, inf, inf, inf, -1,
      inf, 0, 1, 1, -1,
      inf, 1, 0, 2, -1,
      inf, 1, 2, 0, -1,
      -1, -1, -1, -1, -1,
    ]);
    expect(Array.from(item.keep)).toEqual([
      1, 1, 1, 1, 0,
      1, 1, 1, 1, 0,
      1, 1, 1, 1, 0,
      1, 1, 1, 1, 0,
      0, 0, 0, 0, 0,
    ]);
    expect(Array.from(item.participants)).toEqual([1, 1, 1, 1, 0]);
  });

  it("turns the virtual slot into padding when the toggle is off", () => {
    const item = gatherNode(path3, smallCfg({ virtualNode: false }), 0);
    expect(item.kinds[0]).toBe(KIND_PAD);
    expect(Array.from(item.keep.slice(0, 5))).toEqual([0, 0, 0, 0, 0]);
    for (let i = 0; i < 5; i++) expect(item.keep[i * 5 + 0]).toBe(0);
    expect(Array.from(item.participants)).toEqual([0, 1, 1, 1, 0]);
  });

  it("honors the readout exclusion toggles", () => {
    const noEgo = gatherNode(path3, smallCfg({ readoutIncludeEgo: false }), 0);
    expect(Array.from(noEgo.participants)).toEqual([1, 0, 1, 1, 0]);
    const noVirtual = gatherNode(path3, smallCfg({ readoutIncludeVirtual: false }), 0);
    expect(Array.from(noVirtual.participants)).toEqual([0, 1, 1, 1, 0]);
  });

  it("rejects out-of-range nodes and splits gather by tag", () => {
    const cfg = smallCfg();
    expect(() => gatherNode(path3, cfg, 3)).toThrow(/out of range/);
    expect(gatherSplit(path3, cfg, 0).map((i) => i.node)).toEqual([0]);
    expect(gatherSplit(path3, cfg, 1).map((i) => i.node)).toEqual([1]);
    expect(gatherSplit(path3, cfg, 2).map((i) => i.node)).toEqual([2]);
  });
});

describe("embedding", () => {
  it("projects real rows, injects the virtual attribute, keeps padding at zero", () => {
    const cfg = smallCfg();
    const model = new Model(cfg, path3.featureWidth, path3.numClasses);
    const item = gatherNode(path3, cfg, 0);
    const h = model.embed(null, item, false, null);

    const x = constant(5, path3.featureWidth, item.feats);
    const manual = addRow(
      null,
      matmul(null, relu(null, addRow(null, matmul(null, x, model.mlpxW1), model.mlpxB1)), model.mlpxW2),
      model.mlpxB2,
    );
    const F = cfg.hidden;
    for (const r of [1, 2, 3]) {
      expectBitEqual(h.data.slice(r * F, (r + 1) * F), manual.data.slice(r * F, (r + 1) * F));
    }
    expectBitEqual(h.data.slice(0, F), new Float64Array(model.virtualAttr.data));
    for (let j = 0; j < F; j++) expect(Object.is(h.data[4 * F + j], 0)).toBe(true);
  });
});

describe("forward invariants", () => {
  it("evaluation is deterministic bit for bit", () => {
    const cfg = smallCfg();
    const model = new Model(cfg, twohub.featureWidth, twohub.numClasses);
    const item = gatherNode(twohub, cfg, 17);
    const a = model.forwardNode(null, item);
    const b = model.forwardNode(null, item);
    expectBitEqual(a.data, b.data);
  });

  it("training forward with dropout demands an rng", () => {
    const cfg = smallCfg();
    const model = new Model(cfg, path3.featureWidth, path3.numClasses);
    const item = gatherNode(path3, cfg, 0);
    expect(() => model.forwardNode(null, item, true, null)).toThrow(/rng/);
  });

  it("values behind the mask cannot reach the logits", () => {
    const cfg = smallCfg();
    const model = new Model(cfg, twohub.featureWidth, twohub.numClasses);
    randomizeParams(model, 5);

    let padded = -1;
    for (let v = 0; v < twohub.n; v++) {
      let pads = 0;
      for (let i = 0; i < twohub.tokenLen; i++) {
        if (twohub.tokens[v * twohub.tokenLen + i] === -1) pads++;
      }
      if (pads > 0) {
        padded = v;
        break;
      }
    }
    expect(padded).toBeGreaterThanOrEqual(0);

    const clean = gatherNode(twohub, cfg, padded);
    const before = model.forwardNode(null, clean).data.slice();

    const dirty = cloneItem(clean);
    const t = twohub.tokenLen;
    const w = twohub.featureWidth;
    for (let i = 0; i < t; i++) {
      if (dirty.kinds[i] !== KIND_REAL) {
        for (let j = 0; j < w; j++) dirty.feats[i * w + j] = 1234.5 + i + j;
      }
    }
    for (let k = 0; k < t * t; k++) {
      if (dirty.keep[k] === 0) dirty.buckets[k] = 0;
    }
    const after = model.forwardNode(null, dirty).data;
    expectBitEqual(before, after);
  });

  it("fully padded query rows never poison the output", () => {
    const cfg = smallCfg();
    const model = new Model(cfg, path3.featureWidth, path3.numClasses);
    for (let v = 0; v < path3.n; v++) {
      const logits = model.forwardNode(null, gatherNode(path3, cfg, v));
      for (let j = 0; j < logits.size; j++) expect(Number.isFinite(logits.data[j])).toBe(true);
    }
  });

  it("a layer with zeroed output projections is the identity", () => {
    const cfg = smallCfg();
    const model = new Model(cfg, twohub.featureWidth, twohub.numClasses);
    randomizeParams(model, 6);
    model.layers[0].wo.data.fill(0);
    model.layers[0].fw2.data.fill(0);
    model.layers[0].fb2.data.fill(0);
    const item = gatherNode(twohub, cfg, 3);
    const h = model.embed(null, item, false, null);
    const out = model.layerForward(null, h, item, 0, false, null);
    expectBitEqual(out.data, h.data);
  });

  it("relabeling companion slots permutes nothing observable", () => {
    const cfg = smallCfg();
    const model = new Model(cfg, twohub.featureWidth, twohub.numClasses);
    randomizeParams(model, 7);
    const item = gatherNode(twohub, cfg, 2);
    const t = twohub.tokenLen;
    const w = twohub.featureWidth;

    // Fixed permutation of every slot except the ego.
    const others: number[] = [];
    for (let i = 0; i < t; i++) if (i !== item.egoSlot) others.push(i);
    const rotated = others.slice(1).concat(others.slice(0, 1));
    const perm = new Int32Array(t);
    perm[item.egoSlot] = item.egoSlot;
    others.forEach((src, k) => {
      perm[src] = rotated[k];
    });

    const moved = cloneItem(item);
    for (let i = 0; i < t; i++) {
      moved.kinds[perm[i]] = item.kinds[i];
      moved.participants[perm[i]] = item.participants[i];
      for (let j = 0; j < w; j++) moved.feats[perm[i] * w + j] = item.feats[i * w + j];
      for (let j = 0; j < t; j++) {
        moved.buckets[perm[i] * t + perm[j]] = item.buckets[i * t + j];
        moved.keep[perm[i] * t + perm[j]] = item.keep[i * t + j];
      }
    }

    const a = model.forwardNode(null, item);
    const b = model.forwardNode(null, moved);
    expectAllClose(a.data, b.data, 1e-9);
  });
});

describe("readout", () => {
  it("with only the ego participating, the aggregate doubles the ego state", () => {
    const cfg = smallCfg({ layers: 1 });
    const model = new Model(cfg, path3.featureWidth, path3.numClasses);
    randomizeParams(model, 8);
    const F = cfg.hidden;
    const t = 4;
    const h = constant(t, F);
    const hRng = new Rand(99);
    for (let i = 0; i < h.size; i++) h.data[i] = hRng.uniform(0.1, 1.1);

    const item: NodeItem = {
      node: 0,
      label: 0,
      egoSlot: 1,
      kinds: Int8Array.from([KIND_VIRTUAL, KIND_REAL, KIND_PAD, KIND_PAD]),
      feats: new Float64Array(t * path3.featureWidth),
      buckets: new Int32Array(t * t).fill(-1),
      keep: new Uint8Array(t * t),
      participants: Uint8Array.from([0, 1, 0, 0]),
    };

    const got = model.readout(null, h, item);
    const doubled = constant(1, F);
    for (let j = 0; j < F; j++) doubled.data[j] = h.data[1 * F + j] + h.data[1 * F + j];
    const manual = addRow(
      null,
      matmul(
        null,
        relu(null, addRow(null, matmul(null, doubled, model.mlpzW1), model.mlpzB1)),
        model.mlpzW2,
      ),
      model.mlpzB2,
    );
    expectBitEqual(got.data, manual.data);
  });
});

describe("checkpoints", () => {
  it("round-trips parameters, config, and outputs exactly", () => {
    const cfg = smallCfg();
    const model = new Model(cfg, path3.featureWidth, path3.numClasses);
    randomizeParams(model, 9);
    const meta = { bestEpoch: 3, validAccuracy: 0.75 };
    const text = checkpointJson(model, meta);
    const back = modelFromCheckpoint(text);
    expect(back.meta).toEqual(meta);
    expect(back.model.cfg).toEqual(cfg);
    const a = model.paramGroups();
    const b = back.model.paramGroups();
    expect(b.map((g) => g.name)).toEqual(a.map((g) => g.name));
    for (let i = 0; i < a.length; i++) expectBitEqual(a[i].mat.data, b[i].mat.data);
    const item = gatherNode(path3, cfg, 2);
    expectBitEqual(model.forwardNode(null, item).data, back.model.forwardNode(null, item).data);
  });

  it("rejects foreign formats and mis-sized parameters", () => {
    expect(() => modelFromCheckpoint("not json")).toThrow(/valid JSON/);
    expect(() => modelFromCheckpoint('{"format":"other"}')).toThrow(/unrecognized/);
    const model = new Model(smallCfg(), 2, 2);
    const doc = JSON.parse(checkpointJson(model, { bestEpoch: 0, validAccuracy: 0 }));
    doc.params["mlp_x.w1"] = [1, 2, 3];
    expect(() => modelFromCheckpoint(JSON.stringify(doc))).toThrow(/mis-sized/);
  });
});

/**
 * Readers for exported bundle directories.
 *
 * A bundle holds five data files plus a MANIFEST written last:
 *
 *   tokens.dhtk    fixed-length token sequences, one row per node
 *   bias.dhbs      per-node pairwise distance-code matrices (uint16)
 *   features.dhft  float32 feature rows
 *   classes.csv    rank,class-index lines
 *   splits.csv     rank,tag lines (train / valid / test)
 *   MANIFEST       key=value lines plus sha256 checksums
 *
 * All binary layouts are little-endian. Node ids here are 0-based: node k
 * corresponds to rank k+1 of the producer, which is exactly how token
 * slots are stored on disk, so no translation is needed anywhere.
 */
import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { join } from "node:path";

/** Token slot codes after decoding (real slots are node ids >= 0). */
export const TOKEN_PAD = -1;
export const TOKEN_VIRTUAL = -2;

/** Distance-code points in the uint16 bias alphabet. */
export const BIAS_INF = 0xffff;
export const BIAS_MASK = 0xfffe;
export const BIAS_FINITE_MAX = 0xfff0;

const TOKEN_MAGIC = "DHTK";
const BIAS_MAGIC = "DHBS";
const FEATURE_MAGIC = "DHFT";
const DISK_PAD = 0xffffffff;
const DISK_VIRTUAL = 0xfffffffe;
const SPLIT_TAGS = ["train", "valid", "test"] as const;
const BUNDLE_FILES = ["tokens.dhtk", "bias.dhbs", "features.dhft", "classes.csv", "splits.csv"];

export class BundleError extends Error {}

/** Everything the trainer needs, fully materialized in memory. */
export interface Bundle {
  n: number;
  tokenLen: number;
  featureWidth: number;
  numClasses: number;
  config: Record<string, string>;
  /** n x tokenLen slot ids; >= 0 real, -1 PAD, -2 VIRTUAL. */
  tokens: Int32Array;
  /** n x tokenLen x tokenLen distance codes. */
  bias: Uint16Array;
  /** n x featureWidth values, promoted to float64. */
  features: Float64Array;
  /** n class indices in [0, numClasses). */
  classes: Int32Array;
  /** n split tags: 0 train, 1 valid, 2 test. */
  splits: Int8Array;
}

function headerView(blob: Buffer, path: string, need: number): DataView {
  if (blob.length < need) throw new BundleError(`${path}: truncated header`);
  return new DataView(blob.buffer, blob.byteOffset, blob.length);
}

function checkMagic(blob: Buffer, path: string, magic: string): void {
  if (blob.length < 4 || blob.toString("latin1", 0, 4) !== magic) {
    throw new BundleError(`${path}: bad magic`);
  }
}

function u64(view: DataView, offset: number, path: string): number {
  const v = view.getBigUint64(offset, true);
  if (v > BigInt(Number.MAX_SAFE_INTEGER)) throw new BundleError(`${path}: count overflows`);
  return Number(v);
}

/** Parse a token file; returns slots with the disk bias removed. */
export function readTokens(path: string): { n: number; tokenLen: number; slots: Int32Array } {
  const blob = readFileSync(path);
  checkMagic(blob, path, TOKEN_MAGIC);
  const view = headerView(blob, path, 20);
  const version = view.getUint32(4, true);
  if (version !== 1) throw new BundleError(`${path}: unsupported version ${version}`);
  const n = u64(view, 8, path);
  const tokenLen = view.getUint32(16, true);
  if (n < 1 || tokenLen < 1) throw new BundleError(`${path}: implausible dimensions`);
  const expect = 20 + 4 * n * tokenLen;
  if (blob.length !== expect) {
    throw new BundleError(`${path}: size ${blob.length} != expected ${expect}`);
  }
  const slots = new Int32Array(n * tokenLen);
  for (let i = 0; i < slots.length; i++) {
    const raw = view.getUint32(20 + 4 * i, true);
    if (raw === DISK_PAD) slots[i] = TOKEN_PAD;
    else if (raw === DISK_VIRTUAL) slots[i] = TOKEN_VIRTUAL;
    else if (raw < n) slots[i] = raw;
    else throw new BundleError(`${path}: slot id ${raw} out of range for n=${n}`);
  }
  return { n, tokenLen, slots };
}

/** Parse a bias file; validates the code alphabet and per-node symmetry. */
export function readBias(path: string): { n: number; tokenLen: number; codes: Uint16Array } {
  const blob = readFileSync(path);
  checkMagic(blob, path, BIAS_MAGIC);
  const view = headerView(blob, path, 20);
  const version = view.getUint32(4, true);
  if (version !== 1) throw new BundleError(`${path}: unsupported version ${version}`);
  const n = u64(view, 8, path);
  const t = view.getUint32(16, true);
  if (n < 1 || t < 1) throw new BundleError(`${path}: implausible dimensions`);
  const expect = 20 + 2 * n * t * t;
  if (blob.length !== expect) {
    throw new BundleError(`${path}: size ${blob.length} != expected ${expect}`);
  }
  const codes = new Uint16Array(n * t * t);
  for (let i = 0; i < codes.length; i++) {
    const v = view.getUint16(20 + 2 * i, true);
    if (v > BIAS_FINITE_MAX && v !== BIAS_MASK && v !== BIAS_INF) {
      throw new BundleError(`${path}: value ${v} in the reserved code range`);
    }
    codes[i] = v;
  }
  for (let v = 0; v < n; v++) {
    const base = v * t * t;
    for (let i = 0; i < t; i++) {
      for (let j = i + 1; j < t; j++) {
        if (codes[base + i * t + j] !== codes[base + j * t + i]) {
          throw new BundleError(`${path}: matrix for node ${v} not symmetric`);
        }
      }
    }
  }
  return { n, tokenLen: t, codes };
}

/** Parse a feature file into float64 rows. */
export function readFeatures(path: string): { n: number; width: number; values: Float64Array } {
  const blob = readFileSync(path);
  checkMagic(blob, path, FEATURE_MAGIC);
  const view = headerView(blob, path, 16);
  const n = u64(view, 4, path);
  const width = view.getUint32(12, true);
  if (n < 1 || width < 1) throw new BundleError(`${path}: implausible dimensions`);
  const expect = 16 + 4 * n * width;
  if (blob.length !== expect) {
    throw new BundleError(`${path}: size ${blob.length} != expected ${expect}`);
  }
  const values = new Float64Array(n * width);
  for (let i = 0; i < values.length; i++) {
    const v = view.getFloat32(16 + 4 * i, true);
    if (!Number.isFinite(v)) throw new BundleError(`${path}: non-finite feature value`);
    values[i] = v;
  }
  return { n, width, values };
}

function dataRows(path: string): Array<[number, string[]]> {
  const rows: Array<[number, string[]]> = [];
  const text = readFileSync(path, "utf-8");
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const stripped = lines[i].trim();
    if (!stripped || stripped.startsWith("#")) continue;
    rows.push([i + 1, stripped.split(",")]);
  }
  return rows;
}

/** Parse rank,class lines into a 0-based dense class array. */
export function readRankClasses(path: string, n: number): Int32Array {
  const classes = new Int32Array(n).fill(-1);
  for (const [lineNo, parts] of dataRows(path)) {
    if (parts.length !== 2) throw new BundleError(`${path}:${lineNo}: expected rank,class-index`);
    const rank = Number(parts[0]);
    const cls = Number(parts[1]);
    if (!Number.isInteger(rank) || !Number.isInteger(cls)) {
      throw new BundleError(`${path}:${lineNo}: expected integers`);
    }
    if (rank < 1 || rank > n || classes[rank - 1] >= 0 || cls < 0) {
      throw new BundleError(`${path}:${lineNo}: bad rank or class`);
    }
    classes[rank - 1] = cls;
  }
  for (let i = 0; i < n; i++) {
    if (classes[i] < 0) throw new BundleError(`${path}: missing ranks`);
  }
  return classes;
}

/** Parse rank,tag lines into a 0-based dense split array. */
export function readRankSplits(path: string, n: number): Int8Array {
  const splits = new Int8Array(n).fill(-1);
  for (const [lineNo, parts] of dataRows(path)) {
    if (parts.length !== 2) throw new BundleError(`${path}:${lineNo}: expected rank,tag`);
    const rank = Number(parts[0]);
    const tag = SPLIT_TAGS.indexOf(parts[1] as (typeof SPLIT_TAGS)[number]);
    if (!Number.isInteger(rank) || tag < 0 || rank < 1 || rank > n || splits[rank - 1] >= 0) {
      throw new BundleError(`${path}:${lineNo}: bad rank or tag`);
    }
    splits[rank - 1] = tag;
  }
  for (let i = 0; i < n; i++) {
    if (splits[i] < 0) throw new BundleError(`${path}: missing ranks`);
  }
  return splits;
}

function sha256File(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

interface Manifest {
  fields: Record<string, string>;
  checksums: Record<string, string>;
}

function readManifest(dir: string): Manifest {
  const path = join(dir, "MANIFEST");
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch {
    throw new BundleError(`${dir}: missing MANIFEST`);
  }
  const fields: Record<string, string> = {};
  const checksums: Record<string, string> = {};
  for (const line of text.split("\n")) {
    if (!line) continue;
    const eq = line.indexOf("=");
    if (eq < 0) throw new BundleError(`${path}: malformed line "${line}"`);
    const key = line.slice(0, eq);
    const value = line.slice(eq + 1);
    if (key.startsWith("sha256:")) checksums[key.slice("sha256:".length)] = value;
    else fields[key] = value;
  }
  if (fields["format"] !== "hopcover-bundle-1") {
    throw new BundleError(`${dir}: unrecognized manifest format`);
  }
  return { fields, checksums };
}

/**
 * Load a bundle directory: re-hash every data file against the manifest,
 * cross-check headers, and materialize all arrays.
 */
export function loadBundle(dir: string): Bundle {
  const { fields, checksums } = readManifest(dir);
  for (const name of BUNDLE_FILES) {
    const path = join(dir, name);
    if (!(name in checksums)) throw new BundleError(`${dir}: manifest lacks checksum for ${name}`);
    let actual: string;
    try {
      actual = sha256File(path);
    } catch {
      throw new BundleError(`${dir}: missing ${name}`);
    }
    if (actual !== checksums[name]) {
      throw new BundleError(`${dir}: checksum mismatch for ${name}`);
    }
  }

  const n = Number(fields["n"]);
  const tokenLen = Number(fields["token_len"]);
  const featureWidth = Number(fields["feature_width"]);
  const numClasses = Number(fields["classes"]);
  if (![n, tokenLen, featureWidth, numClasses].every((v) => Number.isInteger(v) && v >= 1)) {
    throw new BundleError(`${dir}: manifest dimensions malformed`);
  }

  const tok = readTokens(join(dir, "tokens.dhtk"));
  if (tok.n !== n || tok.tokenLen !== tokenLen) {
    throw new BundleError(`${dir}: token header disagrees with manifest`);
  }
  const bias = readBias(join(dir, "bias.dhbs"));
  if (bias.n !== n || bias.tokenLen !== tokenLen) {
    throw new BundleError(`${dir}: bias header disagrees with manifest`);
  }
  const feats = readFeatures(join(dir, "features.dhft"));
  if (feats.n !== n || feats.width !== featureWidth) {
    throw new BundleError(`${dir}: feature header disagrees with manifest`);
  }
  const classes = readRankClasses(join(dir, "classes.csv"), n);
  let maxClass = -1;
  for (let i = 0; i < n; i++) if (classes[i] > maxClass) maxClass = classes[i];
  if (maxClass + 1 > numClasses) {
    throw new BundleError(`${dir}: class index ${maxClass} exceeds manifest classes=${numClasses}`);
  }
  const splits = readRankSplits(join(dir, "splits.csv"), n);

  const config: Record<string, string> = {};
  const known = new Set(["format", "n", "token_len", "feature_width", "classes", "id_space"]);
  for (const [key, value] of Object.entries(fields)) {
    if (!known.has(key)) config[key] = value;
  }

  return {
    n,
    tokenLen,
    featureWidth,
    numClasses,
    config,
    tokens: tok.slots,
    bias: bias.codes,
    features: feats.values,
    classes,
    splits,
  };
}

/** Checksum and header validation only; returns the manifest summary. */
export function verifyBundle(dir: string): {
  n: number;
  tokenLen: number;
  featureWidth: number;
  classes: number;
  config: Record<string, string>;
} {
  const b = loadBundle(dir);
  return {
    n: b.n,
    tokenLen: b.tokenLen,
    featureWidth: b.featureWidth,
    classes: b.numClasses,
    config: b.config,
  };
}

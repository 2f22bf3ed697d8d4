export {
  BIAS_FINITE_MAX,
  BIAS_INF,
  BIAS_MASK,
  Bundle,
  BundleError,
  TOKEN_PAD,
  TOKEN_VIRTUAL,
  loadBundle,
  readBias,
  readFeatures,
  readRankClasses,
  readRankSplits,
  readTokens,
  verifyBundle,
} from "./bundle.js";
export {
  CheckpointMeta,
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
} from "./model.js";
export { AdamW } from "./adamw.js";
export { Rand } from "./rng.js";
export { Mat, Tape, constant, param } from "./tensor.js";
export { TrainResult, trainModel } from "./train.js";
export { SplitMetrics, argmaxRow, binaryAuc, evaluateSplit, itemMetrics } from "./evaluate.js";

/**
 * Deterministic metrics over a split: mean cross-entropy, accuracy, and
 * for two-class problems the ROC AUC of the class-1 logit margin.
 */
import { Bundle } from "./bundle.js";
import { Model, NodeItem, gatherSplit } from "./model.js";
import { rowCeLoss } from "./tensor.js";

export const SPLIT_NAMES = ["train", "valid", "test"] as const;
export type SplitName = (typeof SPLIT_NAMES)[number];

/** Index of the largest entry; first wins on exact ties. */
export function argmaxRow(row: Float64Array | number[]): number {
  let best = 0;
  for (let i = 1; i < row.length; i++) if (row[i] > row[best]) best = i;
  return best;
}

export interface SplitMetrics {
  n: number;
  loss: number;
  accuracy: number;
  /** Present only for two-class data with both classes in the split. */
  auc: number | null;
}

/**
 * Rank-based ROC AUC with midranks for tied scores. Returns null when
 * either class is absent.
 */
export function binaryAuc(scores: Float64Array, labels: Int32Array | number[]): number | null {
  const n = scores.length;
  if (labels.length !== n) throw new Error("auc: scores and labels differ in length");
  let nPos = 0;
  for (let i = 0; i < n; i++) if (labels[i] === 1) nPos++;
  const nNeg = n - nPos;
  if (nPos === 0 || nNeg === 0) return null;
  const order = Array.from({ length: n }, (_, i) => i).sort((a, b) => scores[a] - scores[b]);
  const ranks = new Float64Array(n);
  let i = 0;
  while (i < n) {
    let j = i;
    while (j + 1 < n && scores[order[j + 1]] === scores[order[i]]) j++;
    const avg = (i + j + 2) / 2;
    for (let k = i; k <= j; k++) ranks[order[k]] = avg;
    i = j + 1;
  }
  let rankSum = 0;
  for (let k = 0; k < n; k++) if (labels[k] === 1) rankSum += ranks[k];
  return (rankSum - (nPos * (nPos + 1)) / 2) / (nPos * nNeg);
}

/** Eval-mode metrics for a list of gathered items. */
export function itemMetrics(model: Model, items: NodeItem[]): SplitMetrics {
  if (items.length === 0) throw new Error("empty split");
  let lossSum = 0;
  let correct = 0;
  const margins = new Float64Array(items.length);
  const labels = new Int32Array(items.length);
  const binary = model.numClasses === 2;
  for (let k = 0; k < items.length; k++) {
    const logits = model.forwardNode(null, items[k]);
    lossSum += rowCeLoss(null, logits, items[k].label).data[0];
    if (argmaxRow(logits.data) === items[k].label) correct++;
    if (binary) {
      margins[k] = logits.data[1] - logits.data[0];
      labels[k] = items[k].label;
    }
  }
  return {
    n: items.length,
    loss: lossSum / items.length,
    accuracy: correct / items.length,
    auc: binary ? binaryAuc(margins, labels) : null,
  };
}

/** Gather a named split from the bundle and score it. */
export function evaluateSplit(bundle: Bundle, model: Model, split: string): SplitMetrics {
  const idx = SPLIT_NAMES.indexOf(split as SplitName);
  if (idx < 0) throw new Error(`unknown split tag "${split}"`);
  if (model.featureWidth !== bundle.featureWidth) {
    throw new Error(
      `checkpoint expects ${model.featureWidth} features, bundle has ${bundle.featureWidth}`,
    );
  }
  if (model.numClasses < bundle.numClasses) {
    throw new Error(`checkpoint has ${model.numClasses} classes, bundle has ${bundle.numClasses}`);
  }
  const items = gatherSplit(bundle, model.cfg, idx);
  if (items.length === 0) throw new Error(`split "${split}" is empty`);
  return itemMetrics(model, items);
}

/**
 * Full training loop: AdamW over shuffled mini-batches, per-epoch metric
 * rows for the train and valid splits, and early stopping on validation
 * accuracy with a patience window. The parameters of the best validation
 * epoch are kept and restored into the returned model.
 *
 * Metrics are measured after each epoch's updates with dropout disabled,
 * so a fixed seed reproduces every logged number exactly.
 */
import { AdamW } from "./adamw.js";
import { Bundle } from "./bundle.js";
import { itemMetrics } from "./evaluate.js";
import { Model, ModelConfig, gatherSplit, validateConfig } from "./model.js";
import { Rand } from "./rng.js";
import { Tape } from "./tensor.js";

export interface TrainOptions {
  /** Receives one human-readable line per epoch. */
  log?: (line: string) => void;
}

export interface EpochRow {
  epoch: number;
  split: "train" | "valid";
  loss: number;
  metric: number;
}

export interface TrainResult {
  model: Model;
  bestEpoch: number;
  bestValidAccuracy: number;
  epochsRun: number;
  rows: EpochRow[];
  metricsCsv: string;
}

function snapshot(model: Model): Float64Array[] {
  return model.paramGroups().map((g) => g.mat.data.slice());
}

function restore(model: Model, saved: Float64Array[]): void {
  model.paramGroups().forEach((g, i) => g.mat.data.set(saved[i]));
}

/** Train on the bundle's train split; returns the best-validation model. */
export function trainModel(bundle: Bundle, cfg: ModelConfig, opts: TrainOptions = {}): TrainResult {
  validateConfig(cfg);
  const trainItems = gatherSplit(bundle, cfg, 0);
  const validItems = gatherSplit(bundle, cfg, 1);
  if (trainItems.length === 0) throw new Error("train split is empty");
  if (validItems.length === 0) throw new Error("valid split is empty");

  const model = new Model(cfg, bundle.featureWidth, bundle.numClasses);
  const opt = new AdamW(
    model.paramGroups().map((g) => g.mat),
    cfg.lr,
    cfg.weightDecay,
  );
  const rng = new Rand(cfg.seed + 1000003);

  const order = new Int32Array(trainItems.length);
  for (let i = 0; i < order.length; i++) order[i] = i;

  const rows: EpochRow[] = [];
  let bestEpoch = -1;
  let bestAcc = -Infinity;
  let bestParams: Float64Array[] = [];
  let patienceLeft = cfg.patience;
  let epochsRun = 0;

  for (let epoch = 0; epoch < cfg.epochs; epoch++) {
    rng.shuffle(order);
    for (let at = 0; at < order.length; at += cfg.batchSize) {
      const batch = [];
      for (let i = at; i < Math.min(at + cfg.batchSize, order.length); i++) {
        batch.push(trainItems[order[i]]);
      }
      const tape = new Tape();
      const loss = model.meanLoss(tape, batch, true, rng);
      tape.backward(loss);
      opt.step();
      opt.zeroGrad();
    }
    epochsRun = epoch + 1;

    const trainM = itemMetrics(model, trainItems);
    const validM = itemMetrics(model, validItems);
    rows.push({ epoch, split: "train", loss: trainM.loss, metric: trainM.accuracy });
    rows.push({ epoch, split: "valid", loss: validM.loss, metric: validM.accuracy });
    opts.log?.(
      `epoch=${epoch} train_loss=${trainM.loss.toFixed(6)} train_acc=${trainM.accuracy.toFixed(4)} ` +
        `valid_loss=${validM.loss.toFixed(6)} valid_acc=${validM.accuracy.toFixed(4)}`,
    );

    if (validM.accuracy > bestAcc) {
      bestAcc = validM.accuracy;
      bestEpoch = epoch;
      bestParams = snapshot(model);
      patienceLeft = cfg.patience;
    } else {
      patienceLeft -= 1;
      if (patienceLeft === 0) break;
    }
  }

  restore(model, bestParams);
  const csv = ["epoch,split,loss,metric"];
  for (const r of rows) csv.push(`${r.epoch},${r.split},${r.loss},${r.metric}`);
  return {
    model,
    bestEpoch,
    bestValidAccuracy: bestAcc,
    epochsRun,
    rows,
    metricsCsv: csv.join("\n") + "\n",
  };
}

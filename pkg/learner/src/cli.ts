#!/usr/bin/env node
/**
 * Command line front end.
 *
 *   hoplearn train    --bundle DIR --out DIR [model flags]
 *   hoplearn evaluate --bundle DIR --checkpoint FILE [--split test]
 *   hoplearn verify   --bundle DIR
 *
 * Model flags mirror the config one to one; the three ablation switches
 * (--no-spd-bias, --no-virtual-node, --mean-readout) flip the matching
 * toggles off. Errors print a single "error: ..." line and exit 1.
 */
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { loadBundle, verifyBundle } from "./bundle.js";
import { evaluateSplit } from "./evaluate.js";
import { ModelConfig, checkpointJson, defaultConfig, modelFromCheckpoint } from "./model.js";
import { trainModel } from "./train.js";

const MODEL_FLAGS = {
  layers: { type: "string" },
  heads: { type: "string" },
  hidden: { type: "string" },
  "ffn-mult": { type: "string" },
  "input-dropout": { type: "string" },
  "hidden-dropout": { type: "string" },
  lr: { type: "string" },
  "weight-decay": { type: "string" },
  epochs: { type: "string" },
  "batch-size": { type: "string" },
  dmax: { type: "string" },
  patience: { type: "string" },
  seed: { type: "string" },
  "shared-bias": { type: "boolean" },
  "no-spd-bias": { type: "boolean" },
  "no-virtual-node": { type: "boolean" },
  "mean-readout": { type: "boolean" },
  "readout-exclude-ego": { type: "boolean" },
  "readout-exclude-virtual": { type: "boolean" },
} as const;

function numberFlag(values: Record<string, unknown>, name: string, integer: boolean): number | null {
  const raw = values[name];
  if (raw === undefined) return null;
  const v = Number(raw);
  if (!Number.isFinite(v) || (integer && !Number.isInteger(v))) {
    throw new Error(`--${name} expects ${integer ? "an integer" : "a number"}, got "${raw}"`);
  }
  return v;
}

function configFromFlags(values: Record<string, unknown>): ModelConfig {
  const cfg = defaultConfig();
  const ints: Array<[keyof ModelConfig, string]> = [
    ["layers", "layers"],
    ["heads", "heads"],
    ["hidden", "hidden"],
    ["ffnMult", "ffn-mult"],
    ["epochs", "epochs"],
    ["batchSize", "batch-size"],
    ["dMax", "dmax"],
    ["patience", "patience"],
    ["seed", "seed"],
  ];
  for (const [key, flag] of ints) {
    const v = numberFlag(values, flag, true);
    if (v !== null) (cfg as any)[key] = v;
  }
  const floats: Array<[keyof ModelConfig, string]> = [
    ["inputDropout", "input-dropout"],
    ["hiddenDropout", "hidden-dropout"],
    ["lr", "lr"],
    ["weightDecay", "weight-decay"],
  ];
  for (const [key, flag] of floats) {
    const v = numberFlag(values, flag, false);
    if (v !== null) (cfg as any)[key] = v;
  }
  if (values["shared-bias"]) cfg.sharedBias = true;
  if (values["no-spd-bias"]) cfg.spdBias = false;
  if (values["no-virtual-node"]) cfg.virtualNode = false;
  if (values["mean-readout"]) cfg.attentiveReadout = false;
  if (values["readout-exclude-ego"]) cfg.readoutIncludeEgo = false;
  if (values["readout-exclude-virtual"]) cfg.readoutIncludeVirtual = false;
  return cfg;
}

function fmt(x: number): string {
  return x.toFixed(6);
}

function cmdTrain(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      bundle: { type: "string" },
      out: { type: "string" },
      quiet: { type: "boolean" },
      ...MODEL_FLAGS,
    },
    strict: true,
  });
  if (!values.bundle || !values.out) throw new Error("train needs --bundle and --out");
  const cfg = configFromFlags(values);
  const bundle = loadBundle(values.bundle);
  if (!values.quiet) {
    console.log(
      `config layers=${cfg.layers} heads=${cfg.heads} hidden=${cfg.hidden} ` +
        `spd_bias=${cfg.spdBias} virtual_node=${cfg.virtualNode} ` +
        `attentive_readout=${cfg.attentiveReadout} seed=${cfg.seed}`,
    );
  }
  const result = trainModel(bundle, cfg, {
    log: values.quiet ? undefined : (line) => console.log(line),
  });
  mkdirSync(values.out, { recursive: true });
  const ckptPath = join(values.out, "checkpoint.json");
  const csvPath = join(values.out, "metrics.csv");
  writeFileSync(
    ckptPath,
    checkpointJson(result.model, {
      bestEpoch: result.bestEpoch,
      validAccuracy: result.bestValidAccuracy,
    }),
  );
  writeFileSync(csvPath, result.metricsCsv);
  console.log(
    `checkpoint=${ckptPath} best_epoch=${result.bestEpoch} ` +
      `valid_acc=${fmt(result.bestValidAccuracy)} epochs_run=${result.epochsRun}`,
  );
  return 0;
}

function cmdEvaluate(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      bundle: { type: "string" },
      checkpoint: { type: "string" },
      split: { type: "string", default: "test" },
    },
    strict: true,
  });
  if (!values.bundle || !values.checkpoint) {
    throw new Error("evaluate needs --bundle and --checkpoint");
  }
  const bundle = loadBundle(values.bundle);
  const { model } = modelFromCheckpoint(readFileSync(values.checkpoint, "utf-8"));
  const m = evaluateSplit(bundle, model, values.split!);
  const auc = m.auc === null ? "" : ` auc=${fmt(m.auc)}`;
  console.log(`split=${values.split} n=${m.n} accuracy=${fmt(m.accuracy)}${auc}`);
  return 0;
}

function cmdVerify(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: { bundle: { type: "string" } },
    strict: true,
  });
  if (!values.bundle) throw new Error("verify needs --bundle");
  const summary = verifyBundle(values.bundle);
  console.log(`BUNDLE OK n=${summary.n} token_len=${summary.tokenLen}`);
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "train":
        return cmdTrain(rest);
      case "evaluate":
        return cmdEvaluate(rest);
      case "verify":
        return cmdVerify(rest);
      case undefined:
      case "--help":
      case "-h":
        console.log("usage: hoplearn <train|evaluate|verify> [options]");
        return command === undefined ? 1 : 0;
      default:
        throw new Error(`unknown command "${command}"`);
    }
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

const invoked = process.argv[1] ? pathToFileURL(process.argv[1]).href : "";
if (import.meta.url === invoked) {
  process.exit(main(process.argv.slice(2)));
}

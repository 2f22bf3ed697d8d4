import { spawnSync } from "node:child_process";
import { cpSync, existsSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";

const CLI = fileURLToPath(new URL("../dist/cli.js", import.meta.url));
const PATH3 = fileURLToPath(new URL("../fixtures/path3", import.meta.url));
const TWOHUB = fileURLToPath(new URL("../fixtures/twohub", import.meta.url));

const tempDirs: string[] = [];

function scratch(): string {
  const dir = mkdtempSync(join(tmpdir(), "cli-test-"));
  tempDirs.push(dir);
  return dir;
}

afterAll(() => {
  for (const dir of tempDirs) rmSync(dir, { recursive: true, force: true });
});

function run(...args: string[]): { rc: number; out: string; err: string } {
  const r = spawnSync(process.execPath, [CLI, ...args], { encoding: "utf-8" });
  return { rc: r.status ?? -1, out: r.stdout, err: r.stderr };
}

const TINY_TRAIN = [
  "--layers", "1",
  "--heads", "2",
  "--hidden", "8",
  "--ffn-mult", "2",
  "--input-dropout", "0",
  "--hidden-dropout", "0",
  "--lr", "0.001",
  "--epochs", "2",
  "--batch-size", "2",
  "--patience", "5",
  "--seed", "9",
];

describe("verify subcommand", () => {
  it("summarizes a healthy bundle", () => {
    const r = run("verify", "--bundle", TWOHUB);
    expect(r.rc).toBe(0);
    expect(r.out).toBe("BUNDLE OK n=300 token_len=8\n");
  });

  it("fails on a tampered bundle", () => {
    const dir = scratch();
    cpSync(PATH3, dir, { recursive: true });
    const path = join(dir, "features.dhft");
    const raw = readFileSync(path);
    raw[raw.length - 1] ^= 0xff;
    writeFileSync(path, raw);
    const r = run("verify", "--bundle", dir);
    expect(r.rc).toBe(1);
    expect(r.err).toMatch(/^error: .*checksum mismatch for features.dhft/);
  });
});

describe("train subcommand", () => {
  it("trains, writes artifacts, and reruns byte-identically", () => {
    const outA = scratch();
    const outB = scratch();
    const a = run("train", "--bundle", PATH3, "--out", outA, "--quiet", ...TINY_TRAIN);
    expect(a.err).toBe("");
    expect(a.rc).toBe(0);
    expect(a.out).toMatch(
      /^checkpoint=.*checkpoint\.json best_epoch=\d+ valid_acc=\d\.\d{6} epochs_run=\d+\n$/,
    );
    expect(existsSync(join(outA, "checkpoint.json"))).toBe(true);
    expect(existsSync(join(outA, "metrics.csv"))).toBe(true);

    const b = run("train", "--bundle", PATH3, "--out", outB, "--quiet", ...TINY_TRAIN);
    expect(b.rc).toBe(0);
    expect(readFileSync(join(outB, "metrics.csv"), "utf-8")).toBe(
      readFileSync(join(outA, "metrics.csv"), "utf-8"),
    );
    expect(readFileSync(join(outB, "checkpoint.json"), "utf-8")).toBe(
      readFileSync(join(outA, "checkpoint.json"), "utf-8"),
    );
  });

  it("prints config and epoch lines unless quieted", () => {
    const out = scratch();
    const r = run("train", "--bundle", PATH3, "--out", out, ...TINY_TRAIN);
    expect(r.rc).toBe(0);
    expect(r.out).toMatch(/^config layers=1 heads=2 hidden=8 spd_bias=true /);
    expect(r.out).toMatch(/epoch=0 train_loss=/);
    expect(r.out).toMatch(/epoch=1 train_loss=/);
  });

  it("maps flags onto the stored checkpoint config", () => {
    const out = scratch();
    const r = run(
      "train", "--bundle", PATH3, "--out", out, "--quiet", ...TINY_TRAIN,
      "--weight-decay", "0.01", "--dmax", "12",
      "--no-spd-bias", "--no-virtual-node", "--mean-readout",
      "--shared-bias", "--readout-exclude-ego", "--readout-exclude-virtual",
    );
    expect(r.err).toBe("");
    expect(r.rc).toBe(0);
    const ckpt = JSON.parse(readFileSync(join(out, "checkpoint.json"), "utf-8"));
    expect(ckpt.config).toMatchObject({
      layers: 1,
      heads: 2,
      hidden: 8,
      ffnMult: 2,
      inputDropout: 0,
      hiddenDropout: 0,
      lr: 0.001,
      weightDecay: 0.01,
      epochs: 2,
      batchSize: 2,
      dMax: 12,
      patience: 5,
      seed: 9,
      spdBias: false,
      virtualNode: false,
      attentiveReadout: false,
      sharedBias: true,
      readoutIncludeEgo: false,
      readoutIncludeVirtual: false,
    });
  });

  it("requires --bundle and --out", () => {
    const r = run("train", "--bundle", PATH3);
    expect(r.rc).toBe(1);
    expect(r.err).toMatch(/^error: train needs --bundle and --out/);
  });
});

describe("evaluate subcommand", () => {
  it("scores a checkpoint on the chosen split", () => {
    const out = scratch();
    expect(run("train", "--bundle", PATH3, "--out", out, "--quiet", ...TINY_TRAIN).rc).toBe(0);
    const ckpt = join(out, "checkpoint.json");
    const test = run("evaluate", "--bundle", PATH3, "--checkpoint", ckpt);
    expect(test.rc).toBe(0);
    expect(test.out).toMatch(/^split=test n=1 accuracy=[01]\.\d{6}\n$/);
    const train = run("evaluate", "--bundle", PATH3, "--checkpoint", ckpt, "--split", "train");
    expect(train.rc).toBe(0);
    expect(train.out).toMatch(/^split=train n=1 accuracy=[01]\.\d{6}\n$/);
  });

  it("rejects a bad split name", () => {
    const out = scratch();
    expect(run("train", "--bundle", PATH3, "--out", out, "--quiet", ...TINY_TRAIN).rc).toBe(0);
    const r = run(
      "evaluate", "--bundle", PATH3,
      "--checkpoint", join(out, "checkpoint.json"),
      "--split", "holdout",
    );
    expect(r.rc).toBe(1);
    expect(r.err).toMatch(/unknown split/);
  });
});

describe("top-level behavior", () => {
  it("prints usage without a command and succeeds under --help", () => {
    const none = run();
    expect(none.rc).toBe(1);
    expect(none.out).toMatch(/^usage: hoplearn/);
    const help = run("--help");
    expect(help.rc).toBe(0);
    expect(help.out).toMatch(/^usage: hoplearn/);
  });

  it("fails cleanly on unknown commands, unknown flags, and missing bundles", () => {
    const unknown = run("frobnicate");
    expect(unknown.rc).toBe(1);
    expect(unknown.err).toMatch(/^error: unknown command "frobnicate"/);

    const badFlag = run("verify", "--bundle", PATH3, "--frob");
    expect(badFlag.rc).toBe(1);
    expect(badFlag.err).toMatch(/^error: /);

    const gone = run("verify", "--bundle", join(tmpdir(), "does-not-exist-anywhere"));
    expect(gone.rc).toBe(1);
    expect(gone.err).toMatch(/^error: .*missing MANIFEST/);

    const badNumber = run("train", "--bundle", PATH3, "--out", scratch(), "--layers", "two");
    expect(badNumber.rc).toBe(1);
    expect(badNumber.err).toMatch(/--layers expects an integer/);
  });
});

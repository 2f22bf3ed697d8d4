"""Regenerate the committed test fixtures.

Builds the 300-node two-cluster bundle with the hopcover CLI and copies
the three-node path bundle from the producer's golden set. Run from the
repository root after installing hopcover:

    python3 learner/scripts/make_fixture.py

Both outputs are deterministic, so a rerun reproduces the committed
bytes exactly.
"""

from __future__ import annotations

import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[2]
FIXTURES = REPO / "learner" / "fixtures"

N = 300
CROSS_EDGES = 3
GRAPH_SEED = 1
FEATURE_SEED = 2
PIPELINE_SEED = 9
WIDTH = 8


def write_inputs(work: Path) -> None:
    sys.path.insert(0, str(REPO / "src"))
    from hopcover.synth import two_hub_graph

    graph, classes = two_hub_graph(N, cross_edges=CROSS_EDGES, seed=GRAPH_SEED)
    with open(work / "edges.txt", "w", encoding="utf-8", newline="\n") as fh:
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")

    # One strongly class-informative column plus noise columns, so a small
    # model can drive the train split to full accuracy while the rest of
    # the signal stays non-trivial.
    rng = np.random.default_rng(FEATURE_SEED)
    feats = rng.normal(0.0, 1.0, size=(N, WIDTH))
    feats[:, 0] = np.where(classes == 0, 1.5, -1.5) + rng.normal(0.0, 0.3, size=N)
    with open(work / "feats.csv", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(N):
            row = ",".join(f"{x:.6f}" for x in feats[i])
            fh.write(f"{i},{row}\n")

    with open(work / "classes.csv", "w", encoding="utf-8", newline="\n") as fh:
        for i in range(N):
            fh.write(f"{i},{int(classes[i])}\n")


def main() -> int:
    work = FIXTURES / "_inputs"
    work.mkdir(parents=True, exist_ok=True)
    write_inputs(work)

    out = FIXTURES / "twohub"
    if out.exists():
        shutil.rmtree(out)
    cmd = [
        sys.executable,
        "-m",
        "hopcover.cli",
        "pipeline",
        "--graph",
        str(work / "edges.txt"),
        "--features",
        str(work / "feats.csv"),
        "--classes",
        str(work / "classes.csv"),
        "--out",
        str(out),
        "--seed",
        str(PIPELINE_SEED),
        "--s-in",
        "4",
        "--s-out",
        "2",
        "--verify",
    ]
    subprocess.run(cmd, check=True)

    golden = REPO / "tests" / "golden" / "path3"
    target = FIXTURES / "path3"
    if target.exists():
        shutil.rmtree(target)
    shutil.copytree(golden, target)

    shutil.rmtree(work)
    print(f"fixtures ready under {FIXTURES}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

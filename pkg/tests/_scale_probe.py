"""Standalone large-graph probe, run in its own process so the parent test
session never holds the multi-GB working set. Prints one JSON line.

Usage: python3 _scale_probe.py OUT_DIR
"""

from __future__ import annotations

import json
import sys
import time

import numpy as np

from hopcover import (
    SamplerConfig,
    build_all_bias,
    build_pll,
    derive_label_graph,
    export_bundle,
    from_edges,
    query_spd_many,
    reorder_by_degree,
    sample_all_tokens,
)
from hopcover.synth import pa_graph

N = 100_000
M = 500_000


def main(out_dir: str) -> int:
    base = pa_graph(N, 5, seed=11)
    edges = set(base.edges)
    rng = np.random.default_rng(123)
    while len(edges) < M:  # top up to the exact edge budget
        u, v = (int(x) for x in rng.integers(0, N, size=2))
        if u != v:
            edges.add((min(u, v), max(u, v)))
    g = reorder_by_degree(from_edges(sorted(edges)))

    t0 = time.perf_counter()
    idx = build_pll(g)
    t_label = time.perf_counter() - t0

    t0 = time.perf_counter()
    cfg = SamplerConfig()  # s_in=16, s_out=15: 32 real slots per token
    tokens = sample_all_tokens(derive_label_graph(idx), cfg)
    t_tokens = time.perf_counter() - t0

    t0 = time.perf_counter()
    bias, stats = build_all_bias(idx, tokens, threads=1)
    t_bias = time.perf_counter() - t0

    t0 = time.perf_counter()
    feats = np.zeros((g.n + 1, 1), dtype=np.float32)
    classes = np.zeros(g.n + 1, dtype=np.int32)
    classes[0] = -1
    splits = np.full(g.n + 1, -1, dtype=np.int8)
    splits[1:] = np.arange(g.n) % 3
    export_bundle(out_dir, tokens, bias, feats, classes, splits,
                  {"seed": cfg.seed, "s_in": cfg.s_in, "s_out": cfg.s_out})
    t_export = time.perf_counter() - t0

    qrng = np.random.default_rng(7)
    us = qrng.integers(1, g.n + 1, size=10_000).astype(np.int64)
    vs = qrng.integers(1, g.n + 1, size=10_000).astype(np.int64)
    _, touched = query_spd_many(idx, us, vs)
    sizes = np.diff(idx.indptr[1:])
    bound_ok = bool(np.all(touched <= sizes[us - 1] + sizes[vs - 1]))

    print(json.dumps({
        "n": g.n,
        "m": g.edge_count,
        "entries": idx.entry_count,
        "t_label": round(t_label, 2),
        "t_tokens": round(t_tokens, 2),
        "t_bias": round(t_bias, 2),
        "t_export": round(t_export, 2),
        "t_total": round(t_label + t_tokens + t_bias + t_export, 2),
        "cache_hit_rate": round(stats.hit_rate, 4),
        "queries": int(us.size),
        "bound_ok": bound_ok,
    }))
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))

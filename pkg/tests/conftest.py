"""Shared fixtures: small hand-traceable graphs and kernel warmup."""

from __future__ import annotations

import numpy as np
import pytest

from hopcover import (
    build_pll,
    build_reference_labels,
    derive_label_graph,
    from_edges,
    query_spd_many,
    reorder_by_degree,
)
from hopcover.bias import build_all_bias
from hopcover.sampler import SamplerConfig, sample_all_tokens


@pytest.fixture(scope="session")
def warm_kernels():
    """Touch every compiled kernel once so timed tests measure the
    algorithms, not JIT compilation (the on-disk cache persists anyway)."""
    g = reorder_by_degree(from_edges([(0, 1), (1, 2), (2, 3), (0, 3)]))
    idx = build_pll(g)
    us = np.array([1, 2], dtype=np.int64)
    query_spd_many(idx, us, us)
    lg = derive_label_graph(idx)
    tokens = sample_all_tokens(lg, SamplerConfig(s_in=1, s_out=1, seed=0))
    build_all_bias(idx, tokens, threads=1)
    build_all_bias(idx, tokens, threads=2, use_cache=False)
    return True


@pytest.fixture
def path3():
    """a-b-c path; original ids a=0, b=1, c=2; ranks b=1, a=2, c=3."""
    return reorder_by_degree(from_edges([(0, 1), (1, 2)]))


@pytest.fixture
def path5():
    """Five-node path 0-1-2-3-4; center nodes outrank the endpoints."""
    return reorder_by_degree(from_edges([(0, 1), (1, 2), (2, 3), (3, 4)]))


@pytest.fixture
def triangle():
    return reorder_by_degree(from_edges([(10, 20), (20, 30), (10, 30)]))


@pytest.fixture
def star():
    """K(1,3) with center original id 7; center takes rank 1."""
    return reorder_by_degree(from_edges([(7, 3), (7, 5), (7, 9)]))


@pytest.fixture
def two_components():
    """A triangle plus a disjoint edge."""
    return reorder_by_degree(from_edges([(0, 1), (1, 2), (0, 2), (8, 9)]))


def all_pairs_match(g, idx) -> bool:
    """Exhaustive equality of label queries against the dense oracle."""
    oracle = build_reference_labels(g, cap=2000)
    ranks = np.arange(1, g.n + 1)
    us, vs = np.meshgrid(ranks, ranks)
    dists, _ = query_spd_many(idx, us.ravel(), vs.ravel())
    return np.array_equal(dists.reshape(g.n, g.n), oracle[1:, 1:])


def write_edge_list(path, edges) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in edges:
            fh.write(f"{u} {v}\n")
    return str(path)


def write_feature_csv(path, g, width: int = 3) -> str:
    """Deterministic per-node features keyed by original id."""
    with open(path, "w", encoding="utf-8") as fh:
        for orig in sorted(g.rank_of):
            vals = ",".join(f"{(orig * 7 + k) % 10}.5" for k in range(width))
            fh.write(f"{orig},{vals}\n")
    return str(path)


def write_class_csv(path, g, n_classes: int = 2) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        for orig in sorted(g.rank_of):
            fh.write(f"{orig},{orig % n_classes}\n")
    return str(path)

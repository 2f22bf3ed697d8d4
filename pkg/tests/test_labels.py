"""Pruned landmark labeling: exact small cases, engine agreement, queries,
the dense reference oracle, and the label file format."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from conftest import all_pairs_match
from hopcover import (
    INF,
    DistanceOverflowError,
    FormatError,
    LabelIndex,
    OracleCapError,
    bfs_distance_oracle,
    build_pll,
    build_reference_labels,
    from_edges,
    query_spd,
    query_spd_counted,
    query_spd_many,
    read_labels,
    reorder_by_degree,
    write_labels,
)
from hopcover.synth import er_graph, pa_graph


def entries(idx, v):
    lms, ds = idx.labels_of(v)
    return list(zip(lms.tolist(), ds.tolist()))


def test_path3_labels_exact(path3):
    idx = build_pll(path3)
    assert entries(idx, 1) == [(1, 0)]
    assert entries(idx, 2) == [(1, 1), (2, 0)]
    assert entries(idx, 3) == [(1, 1), (3, 0)]
    assert idx.entry_count == 5


def test_triangle_labels_exact(triangle):
    idx = build_pll(triangle)
    assert entries(idx, 1) == [(1, 0)]
    assert entries(idx, 2) == [(1, 1), (2, 0)]
    assert entries(idx, 3) == [(1, 1), (2, 1), (3, 0)]
    assert idx.entry_count == 6


def test_star_labels(star):
    idx = build_pll(star)
    # every leaf label is just {center@1, self@0}
    for leaf in (2, 3, 4):
        assert entries(idx, leaf) == [(1, 1), (leaf, 0)]


@pytest.mark.parametrize("seed", range(6))
def test_engines_agree(seed, warm_kernels):
    g = reorder_by_degree(er_graph(60, 0.08, seed=seed))
    a = build_pll(g, engine="numba")
    b = build_pll(g, engine="python")
    assert a.same_as(b)


def test_engines_agree_on_fixtures(path3, path5, triangle, star, two_components):
    for g in (path3, path5, triangle, star, two_components):
        assert build_pll(g, engine="numba").same_as(build_pll(g, engine="python"))


def test_build_is_deterministic(warm_kernels):
    g = reorder_by_degree(er_graph(80, 0.06, seed=12))
    assert build_pll(g).same_as(build_pll(g))


def test_label_invariants(warm_kernels):
    g = reorder_by_degree(pa_graph(150, 3, seed=4))
    idx = build_pll(g)
    for v in range(1, g.n + 1):
        lms, ds = idx.labels_of(v)
        # strictly ascending landmarks, self entry last at distance zero
        assert np.all(np.diff(lms) > 0)
        assert lms[-1] == v
        assert ds[-1] == 0
        # no landmark outranks its owner
        assert lms.max() <= v


def test_label_distances_are_true_spds(two_components):
    idx = build_pll(two_components)
    for v in range(1, two_components.n + 1):
        d_true = bfs_distance_oracle(two_components, v)
        lms, ds = idx.labels_of(v)
        for lm, d in zip(lms, ds):
            assert d == d_true[lm]


def test_all_pairs_small_graphs(path3, path5, triangle, star, two_components, warm_kernels):
    for g in (path3, path5, triangle, star, two_components):
        assert all_pairs_match(g, build_pll(g))


def test_query_examples(path3):
    idx = build_pll(path3)
    assert query_spd(idx, 2, 3) == 2
    assert query_spd(idx, 3, 2) == 2
    assert query_spd(idx, 1, 1) == 0


def test_query_counted_bound(path3):
    idx = build_pll(path3)
    d, touched = query_spd_counted(idx, 2, 3)
    assert d == 2
    assert touched <= idx.label_size(2) + idx.label_size(3)
    assert touched == 3


def test_query_disconnected(two_components):
    idx = build_pll(two_components)
    u = two_components.to_rank(0)
    v = two_components.to_rank(9)
    assert query_spd(idx, u, v) == INF


def test_query_many_matches_scalar(warm_kernels):
    g = reorder_by_degree(er_graph(50, 0.1, seed=2))
    idx = build_pll(g)
    rng = np.random.default_rng(0)
    us = rng.integers(1, g.n + 1, size=200).astype(np.int64)
    vs = rng.integers(1, g.n + 1, size=200).astype(np.int64)
    dists, touched = query_spd_many(idx, us, vs)
    for u, v, d, t in zip(us, vs, dists, touched):
        ds, ts = query_spd_counted(idx, int(u), int(v))
        assert d == ds
        assert t == ts


def test_query_many_rejects_bad_ids(path3):
    idx = build_pll(path3)
    bad = np.array([0], dtype=np.int64)
    ok = np.array([1], dtype=np.int64)
    with pytest.raises(ValueError):
        query_spd_many(idx, bad, ok)
    with pytest.raises(ValueError):
        query_spd_many(idx, ok, np.array([4], dtype=np.int64))


def test_overflow_rejected_both_engines():
    g = reorder_by_degree(from_edges([(i, i + 1) for i in range(20)]))
    for engine in ("numba", "python"):
        with pytest.raises(DistanceOverflowError):
            build_pll(g, engine=engine, max_distance=10)


def test_reference_labels_single_node():
    g = reorder_by_degree(from_edges([], extra_nodes=[42]))
    table = build_reference_labels(g)
    assert table[1, 1] == 0


def test_reference_labels_match_bfs(two_components):
    table = build_reference_labels(two_components)
    assert np.array_equal(table, table.T)
    for v in range(1, two_components.n + 1):
        assert np.array_equal(table[v, 1:], bfs_distance_oracle(two_components, v)[1:])


def test_reference_labels_cap():
    g = reorder_by_degree(from_edges([(i, i + 1) for i in range(30)]))
    with pytest.raises(OracleCapError):
        build_reference_labels(g, cap=10)


def test_label_file_round_trip(tmp_path, triangle):
    idx = build_pll(triangle)
    p = tmp_path / "t.dhlb"
    write_labels(idx, p)
    again = read_labels(p)
    assert idx.same_as(again)
    # byte-stable across rewrites
    data = p.read_bytes()
    write_labels(idx, p)
    assert p.read_bytes() == data


def test_label_file_bad_magic(tmp_path, path3):
    p = tmp_path / "x.dhlb"
    write_labels(build_pll(path3), p)
    raw = bytearray(p.read_bytes())
    raw[:4] = b"NOPE"
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="magic"):
        read_labels(p)


def test_label_file_truncated(tmp_path, path3):
    p = tmp_path / "x.dhlb"
    write_labels(build_pll(path3), p)
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(FormatError):
        read_labels(p)


def test_label_file_trailing_bytes(tmp_path, path3):
    p = tmp_path / "x.dhlb"
    write_labels(build_pll(path3), p)
    p.write_bytes(p.read_bytes() + b"\x00")
    with pytest.raises(FormatError):
        read_labels(p)


def test_label_file_rejects_unsorted_entries(tmp_path):
    # hand-built file for n=1 with two entries: landmark order violated
    payload = b"DHLB" + struct.pack("<IQ", 1, 1) + struct.pack("<I", 2)
    payload += struct.pack("<IH", 1, 0) + struct.pack("<IH", 1, 1)
    p = tmp_path / "bad.dhlb"
    p.write_bytes(payload)
    with pytest.raises(FormatError):
        read_labels(p)


def test_from_lists_round_trip(path3):
    idx = build_pll(path3)
    rebuilt = LabelIndex.from_lists([entries(idx, v) for v in range(1, 4)])
    assert idx.same_as(rebuilt)

"""Directed weighted hierarchy derived from the label index.

Every non-self label entry (v, delta) in L(u) becomes an edge u -> v of
weight delta. Out-edges always point at strictly smaller ranks, so the
out-restricted graph is a DAG; the in-adjacency is the exact transpose.
The checkers in this module validate structural claims about that
hierarchy against a dense distance oracle; they return violation lists
instead of raising so callers can report every failure at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import INF, OrderedGraph
from .labels import LabelIndex


@dataclass(frozen=True)
class LabelGraph:
    """CSR out- and in-adjacency over ranks 1..n (slot 0 unused)."""

    n: int
    out_indptr: np.ndarray  # int64, len n+2
    out_tgt: np.ndarray  # int32, ascending within each node, all < owner
    out_d: np.ndarray  # int32 edge weights
    in_indptr: np.ndarray  # int64, len n+2
    in_src: np.ndarray  # int32, ascending within each node, all > owner
    in_d: np.ndarray  # int32 edge weights

    @property
    def edge_count(self) -> int:
        return int(self.out_tgt.size)

    def out_neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.out_indptr[v], self.out_indptr[v + 1]
        return self.out_tgt[lo:hi], self.out_d[lo:hi]

    def in_neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.in_indptr[v], self.in_indptr[v + 1]
        return self.in_src[lo:hi], self.in_d[lo:hi]

    def has_out_edge(self, u: int, v: int) -> bool:
        tgt, _ = self.out_neighbors(u)
        k = np.searchsorted(tgt, v)
        return k < tgt.size and tgt[k] == v


def derive_label_graph(idx: LabelIndex) -> LabelGraph:
    n = idx.n
    counts = np.diff(idx.indptr[1 : n + 2])
    owners = np.repeat(np.arange(1, n + 1, dtype=np.int32), counts)
    keep = idx.landmarks != owners
    out_tgt = idx.landmarks[keep]
    out_d = idx.dists[keep]
    out_owner = owners[keep]

    out_counts = np.bincount(out_owner, minlength=n + 1)[: n + 1]
    out_indptr = np.zeros(n + 2, dtype=np.int64)
    out_indptr[1:] = np.cumsum(out_counts, dtype=np.int64)

    # Transpose; stable sort keeps sources ascending within each target.
    order = np.argsort(out_tgt, kind="stable")
    in_src = out_owner[order]
    in_d = out_d[order]
    in_counts = np.bincount(out_tgt, minlength=n + 1)[: n + 1]
    in_indptr = np.zeros(n + 2, dtype=np.int64)
    in_indptr[1:] = np.cumsum(in_counts, dtype=np.int64)

    return LabelGraph(
        n=n,
        out_indptr=out_indptr,
        out_tgt=out_tgt.copy(),
        out_d=out_d.copy(),
        in_indptr=in_indptr,
        in_src=in_src.astype(np.int32),
        in_d=in_d.astype(np.int32),
    )


def check_property_1(g: OrderedGraph, lg: LabelGraph) -> list[tuple[int, int]]:
    """Every original edge must appear in the hierarchy oriented from the
    larger rank to the smaller, with weight 1 implied. Returns (hi, lo)
    pairs that are missing."""
    violations = []
    for v in range(1, g.n + 1):
        for w in g.neighbors(v):
            w = int(w)
            if w >= v:
                continue
            if not lg.has_out_edge(v, w):
                violations.append((v, w))
    return violations


def check_property_3(
    g: OrderedGraph, lg: LabelGraph, oracle: np.ndarray
) -> list[tuple[int, int, int]]:
    """No hierarchy edge (u -> v) may skip over a smaller-rank interior node:
    if some node w outside {u, v} lies on a shortest u-v path and w < v, the
    edge should have been pruned away. Returns (u, v, witness) triples."""
    violations = []
    ids = np.arange(oracle.shape[0])
    for u in range(1, lg.n + 1):
        tgts, _ = lg.out_neighbors(u)
        du = oracle[u]
        for v in tgts:
            v = int(v)
            on_path = du + oracle[v] == du[v]
            on_path[u] = False
            on_path[v] = False
            on_path[0] = False
            bad = ids[on_path & (ids < v)]
            if bad.size:
                violations.append((u, v, int(bad[0])))
    return violations


def _shortest_path_nodes(oracle: np.ndarray, u: int, v: int) -> np.ndarray:
    """Boolean mask of every node lying on at least one shortest u-v path."""
    mask = oracle[u] + oracle[v] == oracle[u][v]
    mask[0] = False
    return mask


def check_property_2_corrected(
    g: OrderedGraph, lg: LabelGraph, oracle: np.ndarray
) -> list[tuple[int, int]]:
    """If v is strictly the smallest rank among ALL nodes on ANY shortest
    v-w path, then v must be w's landmark. Returns (v, w) pairs where the
    guarantee fails. This is the provable strengthening of the literal
    claim evaluated by report_property_2_literal."""
    violations = []
    n = lg.n
    ids = np.arange(oracle.shape[0])
    for v in range(1, n + 1):
        dv = oracle[v]
        for w in range(1, n + 1):
            if w == v or dv[w] >= INF:
                continue
            mask = dv + oracle[w] == dv[w]
            mask[0] = False
            mask[v] = False
            others = ids[mask]
            if others.size and others.min() > v:
                if not lg.has_out_edge(w, v):
                    violations.append((v, w))
    return violations


def report_property_2_literal(
    g: OrderedGraph, lg: LabelGraph, oracle: np.ndarray
) -> list[tuple[int, int, int]]:
    """Literal claim: every node w with w > v on any shortest u-v path has
    v as a landmark. This is known NOT to hold for the pruned build; the
    result is informational and must not be asserted empty. Returns
    (u, v, w) counterexamples."""
    counterexamples = []
    n = lg.n
    ids = np.arange(oracle.shape[0])
    for v in range(1, n + 1):
        dv = oracle[v]
        for u in range(1, n + 1):
            if u == v or dv[u] >= INF:
                continue
            mask = oracle[u] + dv == dv[u]
            mask[0] = False
            for w in ids[mask & (ids > v)]:
                w = int(w)
                if not lg.has_out_edge(w, v):
                    counterexamples.append((u, v, w))
    return counterexamples


def format_property_lines(k: int | str, violations: list[tuple]) -> list[str]:
    """Render checker output in the stable line format consumed by scripts."""
    if not violations:
        return [f"PROPERTY {k} OK"]
    lines = []
    for item in violations:
        if len(item) == 3:
            u, v, w = item
            lines.append(f"PROPERTY {k} VIOLATION u={u} v={v} w={w}")
        else:
            u, v = item
            lines.append(f"PROPERTY {k} VIOLATION u={u} v={v}")
    return lines

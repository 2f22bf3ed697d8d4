"""Seeded synthetic graph generators for tests, benchmarks, and fixtures.

All generators hand back a RawGraph over original ids 0..n-1 (isolated
nodes included) and are fully determined by their seed.
"""

from __future__ import annotations

import numpy as np

from .graph import RawGraph, from_edges


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed]))


def er_graph(n: int, p: float, seed: int) -> RawGraph:
    """Erdos-Renyi G(n, p)."""
    rng = _rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    pairs = zip(iu[mask].tolist(), ju[mask].tolist())
    return from_edges(pairs, extra_nodes=range(n))


def gnm_graph(n: int, m: int, seed: int) -> RawGraph:
    """Uniform G(n, m): exactly m distinct undirected edges."""
    if m > n * (n - 1) // 2:
        raise ValueError(f"m={m} exceeds the {n}-node maximum")
    rng = _rng(seed)
    edges: set[tuple[int, int]] = set()
    while len(edges) < m:
        need = m - len(edges)
        a = rng.integers(0, n, size=need + need // 4 + 16)
        b = rng.integers(0, n, size=a.size)
        for x, y in zip(a.tolist(), b.tolist()):
            if x == y:
                continue
            edges.add((x, y) if x < y else (y, x))
            if len(edges) == m:
                break
    return from_edges(edges, extra_nodes=range(n))


def pa_graph(n: int, m_attach: int = 3, seed: int = 0) -> RawGraph:
    """Preferential attachment: each new node links to m_attach existing
    nodes chosen proportionally to degree (repeated-endpoint sampling)."""
    if n <= m_attach:
        raise ValueError(f"need n > m_attach, got n={n} m_attach={m_attach}")
    rng = _rng(seed)
    edges: list[tuple[int, int]] = []
    endpoint_pool: list[int] = []
    for v in range(m_attach, n):
        if not endpoint_pool:
            chosen = list(range(m_attach))
        else:
            picked: set[int] = set()
            while len(picked) < m_attach:
                picked.add(endpoint_pool[int(rng.integers(0, len(endpoint_pool)))])
            chosen = sorted(picked)
        for t in chosen:
            edges.append((v, t))
            endpoint_pool.append(v)
            endpoint_pool.append(t)
    return from_edges(edges, extra_nodes=range(n))


def two_hub_graph(
    n: int, cross_edges: int = 3, seed: int = 0
) -> tuple[RawGraph, np.ndarray]:
    """Two-cluster graph with mostly cross-cluster edges.

    Nodes 0 and 1 are the hubs. Every other node i anchors to hub i%2 and
    adds ``cross_edges`` links to earlier non-hub nodes of the other
    parity, so most edges connect the two clusters. Returns (graph,
    classes) where classes[i] is the parity cluster of original id i; by
    construction it equals the index of the strictly nearer hub (own hub
    at hop 1, the other hub at hop >= 2).
    """
    if n < 4:
        raise ValueError("need at least 4 nodes")
    rng = _rng(seed)
    edges: list[tuple[int, int]] = []
    for i in range(2, n):
        own = i % 2
        edges.append((i, own))
        other_side = [j for j in range(2, i) if j % 2 != own]
        k = min(cross_edges, len(other_side))
        for j in rng.choice(len(other_side), size=k, replace=False).tolist():
            edges.append((i, other_side[j]))
    classes = (np.arange(n) % 2).astype(np.int32)
    return from_edges(edges, extra_nodes=range(n)), classes

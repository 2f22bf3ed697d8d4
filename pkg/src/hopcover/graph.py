"""Input graph loading, normalization, and degree re-ordering.

The pipeline works on an immutable compressed adjacency over nodes renamed
1..n (descending degree, ties by ascending original id). Id 0 is never a
real node, which leaves it free as a sentinel downstream.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import EdgeListParseError, EmptyGraphError

# In-memory sentinel for "unreachable". Distinct from any real hop count
# (label distances are capped far below) and from the on-disk u16 codes.
INF = 0x7FFFFFFF


@dataclass(frozen=True)
class RawGraph:
    """Undirected simple graph over arbitrary integer node ids.

    Edges are normalized: no self-loops, duplicates collapsed, each stored
    once as (min_id, max_id). ``nodes`` keeps every id that appeared in the
    input, including ids left isolated after normalization.
    """

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class OrderedGraph:
    """Compressed adjacency of the re-ordered graph.

    Node ids are ranks 1..n; slot 0 of every per-node array is unused.
    Neighbor lists are ascending and symmetric. Immutable after
    construction and safe to share across concurrent readers.
    """

    n: int
    indptr: np.ndarray  # int64, len n+2; neighbors of v live in [indptr[v], indptr[v+1])
    nbrs: np.ndarray  # int32 rank ids
    degrees: np.ndarray  # int32, len n+1
    orig_ids: np.ndarray  # int64, len n+1; rank -> original id
    rank_of: dict[int, int] = field(repr=False)  # original id -> rank

    @property
    def edge_count(self) -> int:
        return int(self.nbrs.size) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.nbrs[self.indptr[v] : self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def to_original(self, rank: int) -> int:
        return int(self.orig_ids[rank])

    def to_rank(self, original: int) -> int:
        return self.rank_of[original]


def from_edges(edges, extra_nodes=()) -> RawGraph:
    """Build a normalized RawGraph from an iterable of (u, v) pairs.

    Self-loops are dropped (their endpoints are kept as nodes) and
    duplicate / reversed edges collapse to one undirected edge.
    """
    nodes: set[int] = set(extra_nodes)
    dedup: set[tuple[int, int]] = set()
    for u, v in edges:
        nodes.add(u)
        nodes.add(v)
        if u == v:
            continue
        dedup.add((u, v) if u < v else (v, u))
    return RawGraph(nodes=tuple(sorted(nodes)), edges=tuple(sorted(dedup)))


def load_edge_list(path) -> RawGraph:
    """Parse a whitespace-delimited edge-list file.

    One edge per line as two integer tokens; '#' starts a comment line;
    blank lines are ignored. Raises EdgeListParseError with the line
    number on malformed input and EmptyGraphError if no node is referenced.
    """
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise EdgeListParseError(
                    path, line_no, f"expected two integer tokens, got {len(parts)}"
                )
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListParseError(
                    path, line_no, f"non-integer token in {stripped!r}"
                ) from None
            edges.append((u, v))
    if not edges:
        raise EmptyGraphError(f"{path}: no nodes referenced")
    return from_edges(edges)


def reorder_by_degree(g: RawGraph) -> OrderedGraph:
    """Rename nodes to ranks 1..n by descending degree, ties by ascending original id."""
    degree_of: dict[int, int] = {u: 0 for u in g.nodes}
    for a, b in g.edges:
        degree_of[a] += 1
        degree_of[b] += 1

    by_order = sorted(g.nodes, key=lambda u: (-degree_of[u], u))
    n = len(by_order)
    orig_ids = np.zeros(n + 1, dtype=np.int64)
    orig_ids[0] = -1
    rank_of: dict[int, int] = {}
    for rank, orig in enumerate(by_order, start=1):
        orig_ids[rank] = orig
        rank_of[orig] = rank

    degrees = np.zeros(n + 1, dtype=np.int32)
    for orig in g.nodes:
        degrees[rank_of[orig]] = degree_of[orig]

    indptr = np.zeros(n + 2, dtype=np.int64)
    indptr[1:] = np.cumsum(degrees, dtype=np.int64)

    nbrs = np.zeros(int(indptr[n + 1]), dtype=np.int32)
    fill = indptr[:-1].copy()
    for a, b in g.edges:
        ra, rb = rank_of[a], rank_of[b]
        nbrs[fill[ra]] = rb
        fill[ra] += 1
        nbrs[fill[rb]] = ra
        fill[rb] += 1
    # Neighbor lists must be ascending for the merge-joins downstream.
    for v in range(1, n + 1):
        seg = nbrs[indptr[v] : indptr[v + 1]]
        seg.sort()

    return OrderedGraph(
        n=n, indptr=indptr, nbrs=nbrs, degrees=degrees, orig_ids=orig_ids, rank_of=rank_of
    )


def bfs_distance_oracle(g: OrderedGraph, src: int) -> np.ndarray:
    """Exact hop distances from ``src`` to every node (INF where unreachable).

    Plain textbook BFS; used as the independent check against label-based
    queries. Returns int64 of length n+1 indexed by rank (slot 0 unused).
    """
    if not 1 <= src <= g.n:
        raise ValueError(f"source {src} outside 1..{g.n}")
    dist = np.full(g.n + 1, INF, dtype=np.int64)
    dist[0] = INF
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        du = dist[u]
        for w in g.neighbors(u):
            if dist[w] == INF:
                dist[w] = du + 1
                queue.append(w)
    return dist

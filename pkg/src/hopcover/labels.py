"""Two-hop cover label index: construction, distance queries, serialization.

One pruned BFS runs per node in rank order (rank 1 first). During the round
for node ``src``, a visit to ``u`` at depth d is kept only if no pair of
existing labels already certifies a path of length <= d; kept visits append
(src, d) to L(u). The resulting per-node lists are strictly ascending by
landmark, every landmark is <= its owner, and the distance between any two
nodes is the minimum of b(u,w)+b(w,v) over shared landmarks w.

Storage mirrors the graph CSR: one indptr array plus flat landmark/distance
arrays, slot 0 unused. Distances on disk are 16-bit; builds reject any hop
count above MAX_STORED_DISTANCE instead of wrapping.
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DistanceOverflowError, FormatError, OracleCapError
from .graph import INF, OrderedGraph

# Largest hop count the 16-bit on-disk encoding accepts; codes above this
# are reserved for sentinels.
MAX_STORED_DISTANCE = 65000

LABEL_MAGIC = b"DHLB"
LABEL_VERSION = 1

_ENTRY_DT = np.dtype([("lm", "<u4"), ("d", "<u2")])


@dataclass(frozen=True)
class LabelIndex:
    """Immutable per-node landmark lists in CSR layout (slot 0 unused)."""

    n: int
    indptr: np.ndarray  # int64, len n+2
    landmarks: np.ndarray  # int32, ascending within each node
    dists: np.ndarray  # int32, parallel to landmarks

    @property
    def entry_count(self) -> int:
        return int(self.landmarks.size)

    @property
    def avg_label_size(self) -> float:
        return self.entry_count / self.n

    def label_size(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def labels_of(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.landmarks[lo:hi], self.dists[lo:hi]

    def same_as(self, other: "LabelIndex") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.landmarks, other.landmarks)
            and np.array_equal(self.dists, other.dists)
        )

    @classmethod
    def from_lists(cls, per_node: list[list[tuple[int, int]]]) -> "LabelIndex":
        """Assemble from one (landmark, distance) list per node; index 0 of
        ``per_node`` corresponds to rank 1."""
        n = len(per_node)
        indptr = np.zeros(n + 2, dtype=np.int64)
        for v, entries in enumerate(per_node, start=1):
            indptr[v + 1] = indptr[v] + len(entries)
        lms = np.empty(int(indptr[n + 1]), dtype=np.int32)
        ds = np.empty(int(indptr[n + 1]), dtype=np.int32)
        pos = 0
        for entries in per_node:
            for lm, d in entries:
                lms[pos] = lm
                ds[pos] = d
                pos += 1
        return cls(n=n, indptr=indptr, landmarks=lms, dists=ds)


def _build_pll_python(g: OrderedGraph, max_distance: int) -> LabelIndex:
    """Readable reference build; the compiled kernel must match it exactly."""
    n = g.n
    lm_lists: list[list[int]] = [[] for _ in range(n + 1)]
    d_lists: list[list[int]] = [[] for _ in range(n + 1)]
    # T[w] = distance from the current source to landmark w, -1 when unset.
    T = [-1] * (n + 1)
    dist = [-1] * (n + 1)

    for src in range(1, n + 1):
        for w, dw in zip(lm_lists[src], d_lists[src]):
            T[w] = dw
        T[src] = 0
        dist[src] = 0
        queue = deque([src])
        touched = [src]
        while queue:
            u = queue.popleft()
            du = dist[u]
            # Prune as soon as one landmark pair certifies a path <= du.
            pruned = False
            for w, dw in zip(lm_lists[u], d_lists[u]):
                tw = T[w]
                if 0 <= tw and tw + dw <= du:
                    pruned = True
                    break
            if pruned:
                continue
            if du > max_distance:
                raise DistanceOverflowError(
                    f"hop count {du} exceeds the storable maximum {max_distance}"
                )
            lm_lists[u].append(src)
            d_lists[u].append(du)
            for w in g.neighbors(u):
                w = int(w)
                if dist[w] < 0:
                    dist[w] = du + 1
                    queue.append(w)
                    touched.append(w)
        for w in lm_lists[src]:
            T[w] = -1
        T[src] = -1
        for u in touched:
            dist[u] = -1

    return LabelIndex.from_lists(
        [list(zip(lm_lists[v], d_lists[v])) for v in range(1, n + 1)]
    )


def build_pll(
    g: OrderedGraph, engine: str = "numba", max_distance: int = MAX_STORED_DISTANCE
) -> LabelIndex:
    """Build the pruned 2-hop label index for an ordered graph.

    ``engine`` picks the compiled kernel ("numba", default) or the pure
    Python reference ("python"); both produce identical indexes.
    """
    if max_distance > MAX_STORED_DISTANCE:
        raise ValueError(f"max_distance {max_distance} above storable {MAX_STORED_DISTANCE}")
    if engine == "python":
        return _build_pll_python(g, max_distance)
    if engine != "numba":
        raise ValueError(f"unknown engine {engine!r}")
    from . import _kernels

    indptr, lms, ds, overflow = _kernels.pll_build(
        g.n, g.indptr, g.nbrs, max_distance
    )
    if overflow >= 0:
        raise DistanceOverflowError(
            f"hop count {overflow} exceeds the storable maximum {max_distance}"
        )
    return LabelIndex(n=g.n, indptr=indptr, landmarks=lms, dists=ds)


def query_spd(idx: LabelIndex, u: int, v: int) -> int:
    """Hop distance between u and v, INF when they share no landmark."""
    dist, _ = query_spd_counted(idx, u, v)
    return dist


def query_spd_counted(idx: LabelIndex, u: int, v: int) -> tuple[int, int]:
    """Distance plus the number of label entries the merge-join examined.

    The count never exceeds |L(u)| + |L(v)|.
    """
    if not 1 <= u <= idx.n or not 1 <= v <= idx.n:
        raise ValueError(f"query ({u}, {v}) outside 1..{idx.n}")
    lu, du = idx.labels_of(u)
    lv, dv = idx.labels_of(v)
    i = j = 0
    best = INF
    touched = 0
    while i < lu.size and j < lv.size:
        a, b = lu[i], lv[j]
        if a == b:
            cand = int(du[i]) + int(dv[j])
            if cand < best:
                best = cand
            i += 1
            j += 1
            touched += 2
        elif a < b:
            i += 1
            touched += 1
        else:
            j += 1
            touched += 1
    return best, touched


def query_spd_many(
    idx: LabelIndex, us: np.ndarray, vs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Batch distances via the compiled merge-join; returns (dists, touched)."""
    from . import _kernels

    us = np.ascontiguousarray(us, dtype=np.int64)
    vs = np.ascontiguousarray(vs, dtype=np.int64)
    if us.size and (us.min() < 1 or us.max() > idx.n or vs.min() < 1 or vs.max() > idx.n):
        raise ValueError(f"batch query ids outside 1..{idx.n}")
    out_d = np.empty(us.size, dtype=np.int64)
    out_t = np.empty(us.size, dtype=np.int64)
    _kernels.query_batch(idx.indptr, idx.landmarks, idx.dists, us, vs, out_d, out_t)
    return out_d, out_t


def build_reference_labels(g: OrderedGraph, cap: int = 1000) -> np.ndarray:
    """Dense exact all-pairs hop distances for validation on small graphs.

    Returns int64 of shape (n+1, n+1) indexed by rank with INF for
    unreachable pairs; row/column 0 are unused (all INF). Computed by a
    library BFS sweep, deliberately sharing no code with build_pll.
    """
    if g.n > cap:
        raise OracleCapError(f"n={g.n} exceeds oracle cap {cap}")
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path

    n = g.n
    adj = csr_matrix(
        (
            np.ones(g.nbrs.size, dtype=np.int8),
            g.nbrs - 1,
            g.indptr[1 : n + 2],
        ),
        shape=(n, n),
    )
    dense = shortest_path(adj, method="D", directed=False, unweighted=True)
    table = np.full((n + 1, n + 1), INF, dtype=np.int64)
    finite = np.isfinite(dense)
    table[1:, 1:][finite] = dense[finite].astype(np.int64)
    return table


def write_labels(idx: LabelIndex, path) -> None:
    """Serialize to the DHLB layout (all integers little-endian):

    magic "DHLB", version u32, n u64, then per node rank 1..n an entry
    count u32 followed by (landmark u32, distance u16) pairs.
    """
    with open(path, "wb") as fh:
        fh.write(LABEL_MAGIC)
        fh.write(struct.pack("<IQ", LABEL_VERSION, idx.n))
        for v in range(1, idx.n + 1):
            lms, ds = idx.labels_of(v)
            fh.write(struct.pack("<I", lms.size))
            rec = np.empty(lms.size, dtype=_ENTRY_DT)
            rec["lm"] = lms
            rec["d"] = ds
            fh.write(rec.tobytes())


def read_labels(path) -> LabelIndex:
    """Load and validate a DHLB file; FormatError on any structural defect."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16:
        raise FormatError(f"{path}: truncated header")
    if blob[:4] != LABEL_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    version, n = struct.unpack_from("<IQ", blob, 4)
    if version != LABEL_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n < 1:
        raise FormatError(f"{path}: node count {n} invalid")

    indptr = np.zeros(n + 2, dtype=np.int64)
    chunks_lm = []
    chunks_d = []
    off = 16
    for v in range(1, n + 1):
        if off + 4 > len(blob):
            raise FormatError(f"{path}: truncated at node {v}")
        (count,) = struct.unpack_from("<I", blob, off)
        off += 4
        end = off + 6 * count
        if end > len(blob):
            raise FormatError(f"{path}: truncated entries at node {v}")
        rec = np.frombuffer(blob, dtype=_ENTRY_DT, count=count, offset=off)
        off = end
        lms = rec["lm"].astype(np.int32)
        ds = rec["d"].astype(np.int32)
        if count == 0:
            raise FormatError(f"{path}: node {v} has no self entry")
        if lms.min() < 1 or lms.max() > n:
            raise FormatError(f"{path}: node {v} landmark outside 1..{n}")
        if np.any(np.diff(lms) <= 0):
            raise FormatError(f"{path}: node {v} landmarks not strictly ascending")
        if lms[-1] != v or ds[-1] != 0 or lms.max() > v:
            raise FormatError(f"{path}: node {v} label list violates ordering contract")
        indptr[v + 1] = indptr[v] + count
        chunks_lm.append(lms)
        chunks_d.append(ds)
    if off != len(blob):
        raise FormatError(f"{path}: {len(blob) - off} trailing bytes")
    return LabelIndex(
        n=n,
        indptr=indptr,
        landmarks=np.concatenate(chunks_lm),
        dists=np.concatenate(chunks_d),
    )

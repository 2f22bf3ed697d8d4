"""Per-token pairwise hop-distance matrices with sentinel codes.

For a token of length t the bias matrix is t x t of u16 codes: real-real
pairs carry the exact hop distance (clamped at BIAS_FINITE_MAX, which the
build-time distance cap keeps unreachable), any pair touching a PAD slot
is BIAS_MASK, any remaining pair touching a VIRTUAL slot is BIAS_INF, and
real diagonals are 0. PAD outranks VIRTUAL so padding can never receive
attention downstream. Pair distances repeat heavily across overlapping
tokens, so lookups go through a memoizing cache whose presence never
changes results.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .graph import INF
from .labels import LabelIndex, query_spd
from .sampler import TOKEN_PAD, TOKEN_VIRTUAL

BIAS_INF = 0xFFFF
BIAS_MASK = 0xFFFE
BIAS_FINITE_MAX = 0xFFF0

BIAS_MAGIC = b"DHBS"
BIAS_VERSION = 1


class PairCache:
    """Memoizes unordered-pair hop distances; counts hits and misses."""

    def __init__(self):
        self._map: dict[tuple[int, int], int] = {}
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._map)

    def distance(self, idx: LabelIndex, a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        hit = self._map.get(key)
        if hit is not None:
            self.hits += 1
            return hit
        self.misses += 1
        d = query_spd(idx, a, b)
        self._map[key] = d
        return d


@dataclass(frozen=True)
class CacheStats:
    hits: int
    misses: int

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0


def build_bias(
    idx: LabelIndex, token: np.ndarray, cache: PairCache | None = None
) -> np.ndarray:
    """Bias matrix for one token as u16 of shape (t, t)."""
    t = token.size
    out = np.empty((t, t), dtype=np.uint16)
    for i in range(t):
        a = int(token[i])
        for j in range(i, t):
            b = int(token[j])
            if a == TOKEN_PAD or b == TOKEN_PAD:
                code = BIAS_MASK
            elif a == TOKEN_VIRTUAL or b == TOKEN_VIRTUAL:
                code = BIAS_INF
            elif i == j:
                code = 0
            else:
                d = cache.distance(idx, a, b) if cache else query_spd(idx, a, b)
                assert d < INF, "token holds a real pair with no shared component"
                code = min(d, BIAS_FINITE_MAX)
            out[i, j] = code
            out[j, i] = code
    return out


def build_all_bias(
    idx: LabelIndex,
    tokens: np.ndarray,
    engine: str = "numba",
    threads: int = 1,
    use_cache: bool | None = None,
) -> tuple[np.ndarray, CacheStats]:
    """Bias matrices for all tokens: u16 of shape (n+1, t, t), row 0 MASK.

    The serial path memoizes across tokens; the multi-threaded path
    recomputes per pair (identical values, so outputs match bytewise).
    ``use_cache`` defaults to whatever the thread count implies.
    """
    n = tokens.shape[0] - 1
    t = tokens.shape[1]
    if use_cache is None:
        use_cache = threads == 1
    out = np.full((n + 1, t, t), BIAS_MASK, dtype=np.uint16)

    if engine == "python":
        cache = PairCache() if use_cache else None
        for v in range(1, n + 1):
            out[v] = build_bias(idx, tokens[v], cache)
        stats = CacheStats(cache.hits, cache.misses) if cache else CacheStats(0, 0)
        return out, stats
    if engine != "numba":
        raise ValueError(f"unknown engine {engine!r}")

    from . import _kernels

    if use_cache:
        hits, misses, bad = _kernels.bias_fill_cached(
            tokens, idx.indptr, idx.landmarks, idx.dists, out
        )
        stats = CacheStats(int(hits), int(misses))
    else:
        import numba

        # Honor the request up to what the host actually has.
        numba.set_num_threads(min(max(1, threads), numba.config.NUMBA_NUM_THREADS))
        bad = _kernels.bias_fill_parallel(
            tokens, idx.indptr, idx.landmarks, idx.dists, out
        )
        stats = CacheStats(0, 0)
    assert bad == 0, "token holds a real pair with no shared component"
    return out, stats


def write_bias(bias: np.ndarray, path) -> None:
    """Serialize to the DHBS layout (little-endian): magic "DHBS", version
    u32, n u64, token_len u32, then n full t x t u16 matrices row-major."""
    n = bias.shape[0] - 1
    t = bias.shape[1]
    with open(path, "wb") as fh:
        fh.write(BIAS_MAGIC)
        fh.write(struct.pack("<IQI", BIAS_VERSION, n, t))
        fh.write(np.ascontiguousarray(bias[1:], dtype="<u2").tobytes())


def read_bias(path) -> np.ndarray:
    """Load a DHBS file; shape (n+1, t, t) with the unused row 0 all MASK."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 20:
        raise FormatError(f"{path}: truncated header")
    if blob[:4] != BIAS_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    version, n, t = struct.unpack_from("<IQI", blob, 4)
    if version != BIAS_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n < 1 or t < 1:
        raise FormatError(f"{path}: implausible dimensions n={n} token_len={t}")
    expect = 20 + 2 * n * t * t
    if len(blob) != expect:
        raise FormatError(f"{path}: size {len(blob)} != expected {expect}")
    body = np.frombuffer(blob, dtype="<u2", offset=20).reshape(n, t, t)
    invalid = (body > BIAS_FINITE_MAX) & (body != BIAS_MASK) & (body != BIAS_INF)
    if np.any(invalid):
        raise FormatError(f"{path}: value in the reserved code range")
    if not np.array_equal(body, body.transpose(0, 2, 1)):
        raise FormatError(f"{path}: matrices not symmetric")
    out = np.full((n + 1, t, t), BIAS_MASK, dtype=np.uint16)
    out[1:] = body
    return out

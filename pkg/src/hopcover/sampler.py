"""Fixed-length subgraph tokens sampled from label-graph neighborhoods.

Each node v gets a token laid out as [virtual slots..., ego, selected
in-neighbors, selected out-neighbors, padding]. Selection is weighted
sampling WITHOUT replacement where a neighbor at hop distance d carries
weight d^r, drawn via exponential keys (Gumbel top-k), so negative
exponents favor near neighbors. Every node draws from its own generator
derived from (seed, node), which makes results independent of iteration
order and of how work is split across workers.

In-memory slot codes are signed: real entries are ranks >= 1, PAD is -1,
VIRTUAL is -2. The on-disk layout is unsigned with real ids biased to
0-based; see write_tokens.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .labelgraph import LabelGraph

TOKEN_PAD = -1
TOKEN_VIRTUAL = -2

TOKEN_MAGIC = b"DHTK"
TOKEN_VERSION = 1
_DISK_PAD = 0xFFFFFFFF
_DISK_VIRTUAL = 0xFFFFFFFE


@dataclass(frozen=True)
class SamplerConfig:
    s_in: int = 16
    s_out: int = 15
    r_in: float = -1.0
    r_out: float = -1.0
    seed: int = 42
    rebalance: bool = True
    virtual_count: int = 1

    def __post_init__(self):
        if self.s_in < 0 or self.s_out < 0:
            raise ValueError("sampling budgets must be non-negative")
        if not (np.isfinite(self.r_in) and np.isfinite(self.r_out)):
            raise ValueError("sampling exponents must be finite")
        if self.virtual_count < 0:
            raise ValueError("virtual_count must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def s(self) -> int:
        """Real slots per token: ego plus both side budgets."""
        return self.s_in + self.s_out + 1

    @property
    def token_len(self) -> int:
        return self.s + self.virtual_count


def node_stream(seed: int, v: int) -> np.random.Generator:
    """Independent per-node generator; (seed, v) fully determines it."""
    return np.random.default_rng(np.random.SeedSequence([seed, v]))


def _weighted_take(
    ids: np.ndarray, dists: np.ndarray, r: float, budget: int, rng: np.random.Generator
) -> np.ndarray:
    """Without-replacement draw of min(budget, len(ids)) entries with weight
    dists**r, returned ascending. Uniform draws are consumed for the whole
    candidate list even when no selection is needed, so a node's stream
    advances identically regardless of budgets."""
    if ids.size == 0:
        return ids[:0]
    u = rng.random(ids.size)
    if budget <= 0:
        return ids[:0]
    if budget >= ids.size:
        return ids.copy()
    with np.errstate(divide="ignore"):
        keys = r * np.log(dists.astype(np.float64)) - np.log(-np.log(u))
    top = np.argsort(-keys, kind="stable")[:budget]
    return np.sort(ids[top])


def sample_token(
    lg: LabelGraph, v: int, cfg: SamplerConfig, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Token for one node as int32 of length cfg.token_len.

    When ``rebalance`` is set, budget a side cannot fill moves to the
    other side; total real non-ego entries never exceed s_in + s_out.
    """
    if not 1 <= v <= lg.n:
        raise ValueError(f"node {v} outside 1..{lg.n}")
    if rng is None:
        rng = node_stream(cfg.seed, v)
    in_ids, in_d = lg.in_neighbors(v)
    out_ids, out_d = lg.out_neighbors(v)

    b_in, b_out = cfg.s_in, cfg.s_out
    if cfg.rebalance:
        b_in += max(0, cfg.s_out - out_ids.size)
        b_out += max(0, cfg.s_in - in_ids.size)

    # Draw order is part of the determinism contract: in side first.
    chosen_in = _weighted_take(in_ids, in_d, cfg.r_in, b_in, rng)
    chosen_out = _weighted_take(out_ids, out_d, cfg.r_out, b_out, rng)

    token = np.full(cfg.token_len, TOKEN_PAD, dtype=np.int32)
    token[: cfg.virtual_count] = TOKEN_VIRTUAL
    pos = cfg.virtual_count
    token[pos] = v
    pos += 1
    token[pos : pos + chosen_in.size] = chosen_in
    pos += chosen_in.size
    token[pos : pos + chosen_out.size] = chosen_out
    return token


def sample_all_tokens(lg: LabelGraph, cfg: SamplerConfig) -> np.ndarray:
    """Tokens for every node: int32 of shape (n+1, token_len), row 0 padding."""
    tokens = np.full((lg.n + 1, cfg.token_len), TOKEN_PAD, dtype=np.int32)
    for v in range(1, lg.n + 1):
        tokens[v] = sample_token(lg, v, cfg)
    return tokens


def write_tokens(tokens: np.ndarray, path) -> None:
    """Serialize to the DHTK layout (little-endian): magic "DHTK", version
    u32, n u64, token_len u32, then n rows of token_len u32 slots. Real
    ids are stored 0-based; PAD is 0xFFFFFFFF, VIRTUAL is 0xFFFFFFFE."""
    n = tokens.shape[0] - 1
    t = tokens.shape[1]
    body = tokens[1:].astype(np.int64)
    if np.any(body == 0):
        raise ValueError("token slot 0 is not a real node id")
    disk = np.where(
        body >= 1,
        body - 1,
        np.where(body == TOKEN_PAD, _DISK_PAD, _DISK_VIRTUAL),
    ).astype("<u4")
    with open(path, "wb") as fh:
        fh.write(TOKEN_MAGIC)
        fh.write(struct.pack("<IQI", TOKEN_VERSION, n, t))
        fh.write(disk.tobytes())


def read_tokens(path) -> np.ndarray:
    """Load a DHTK file back into the in-memory signed representation."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 20:
        raise FormatError(f"{path}: truncated header")
    if blob[:4] != TOKEN_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    version, n, t = struct.unpack_from("<IQI", blob, 4)
    if version != TOKEN_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n < 1 or t < 1:
        raise FormatError(f"{path}: implausible dimensions n={n} token_len={t}")
    expect = 20 + 4 * n * t
    if len(blob) != expect:
        raise FormatError(f"{path}: size {len(blob)} != expected {expect}")
    disk = np.frombuffer(blob, dtype="<u4", offset=20).reshape(n, t).astype(np.int64)
    bad = (disk < _DISK_VIRTUAL) & (disk > n - 1)
    if np.any(bad):
        raise FormatError(f"{path}: slot value outside node range")
    tokens = np.full((n + 1, t), TOKEN_PAD, dtype=np.int32)
    tokens[1:] = np.where(
        disk == _DISK_PAD,
        TOKEN_PAD,
        np.where(disk == _DISK_VIRTUAL, TOKEN_VIRTUAL, disk + 1),
    ).astype(np.int32)
    return tokens

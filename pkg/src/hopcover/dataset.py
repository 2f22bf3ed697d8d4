"""Feature / class-label / split ingestion and bundle assembly.

A bundle directory holds five data files plus a MANIFEST written last:

    tokens.dhtk    subgraph tokens        (binary, see sampler)
    bias.dhbs      pairwise bias codes    (binary, see bias)
    features.dhft  node attributes        (binary, below)
    classes.csv    rank,class-index       (text, ranks 1..n)
    splits.csv     rank,tag               (text, tags train/valid/test)
    MANIFEST       key=value lines + sha256 checksums of the files above

Ingested CSVs identify nodes by their ORIGINAL edge-list ids; everything
inside a bundle lives in rank space. The manifest carries no timestamps,
so re-exporting identical inputs reproduces every byte.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import BundleError, DataError, FormatError
from .graph import OrderedGraph

FEATURE_MAGIC = b"DHFT"
SPLIT_TAGS = ("train", "valid", "test")
BUNDLE_FILES = ("tokens.dhtk", "bias.dhbs", "features.dhft", "classes.csv", "splits.csv")
MANIFEST_NAME = "MANIFEST"


def _data_rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield line_no, stripped.split(",")


def write_features(feats: np.ndarray, path) -> None:
    """Serialize to the DHFT layout (little-endian): magic "DHFT", n u64,
    width u32, then n rows of float32 values in rank order."""
    n = feats.shape[0] - 1
    width = feats.shape[1]
    if not np.all(np.isfinite(feats[1:])):
        raise DataError("non-finite feature value")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<QI", n, width))
        fh.write(np.ascontiguousarray(feats[1:], dtype="<f4").tobytes())


def read_features(path) -> np.ndarray:
    """Load a DHFT file; float32 of shape (n+1, width) with row 0 zeros."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16:
        raise FormatError(f"{path}: truncated header")
    if blob[:4] != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    n, width = struct.unpack_from("<QI", blob, 4)
    if n < 1 or width < 1:
        raise FormatError(f"{path}: implausible dimensions n={n} width={width}")
    expect = 16 + 4 * n * width
    if len(blob) != expect:
        raise FormatError(f"{path}: size {len(blob)} != expected {expect}")
    body = np.frombuffer(blob, dtype="<f4", offset=16).reshape(n, width)
    if not np.all(np.isfinite(body)):
        raise FormatError(f"{path}: non-finite feature value")
    out = np.zeros((n + 1, width), dtype=np.float32)
    out[1:] = body
    return out


def load_features(path, g: OrderedGraph) -> np.ndarray:
    """Read node features from CSV (original ids, permuted into rank order)
    or from a DHFT file (already in rank order). Returns (n+1, width)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == FEATURE_MAGIC:
        feats = read_features(path)
        if feats.shape[0] - 1 != g.n:
            raise DataError(f"{path}: feature rows {feats.shape[0] - 1} != n {g.n}")
        return feats

    width = -1
    feats = None
    seen = np.zeros(g.n + 1, dtype=bool)
    for line_no, parts in _data_rows(path):
        if len(parts) < 2:
            raise DataError(f"{path}:{line_no}: need node-id plus at least one value")
        try:
            orig = int(parts[0])
            values = [float(p) for p in parts[1:]]
        except ValueError:
            raise DataError(f"{path}:{line_no}: malformed row") from None
        if width < 0:
            width = len(values)
            feats = np.zeros((g.n + 1, width), dtype=np.float32)
        elif len(values) != width:
            raise DataError(f"{path}:{line_no}: expected {width} values, got {len(values)}")
        if orig not in g.rank_of:
            raise DataError(f"{path}:{line_no}: unknown node {orig}")
        rank = g.rank_of[orig]
        if seen[rank]:
            raise DataError(f"{path}:{line_no}: duplicate row for node {orig}")
        seen[rank] = True
        row = np.asarray(values, dtype=np.float32)
        if not np.all(np.isfinite(row)):
            raise DataError(f"{path}:{line_no}: non-finite value for node {orig}")
        feats[rank] = row
    if feats is None:
        raise DataError(f"{path}: no feature rows")
    if not seen[1:].all():
        missing = g.to_original(int(np.flatnonzero(~seen[1:])[0] + 1))
        raise DataError(f"{path}: missing feature row for node {missing}")
    return feats


def load_class_labels(path, g: OrderedGraph) -> np.ndarray:
    """Read "node-id,class-index" CSV by original id into an int32 array of
    length n+1 (slot 0 = -1). Class indices must be contiguous from 0."""
    classes = np.full(g.n + 1, -1, dtype=np.int32)
    for line_no, parts in _data_rows(path):
        if len(parts) != 2:
            raise DataError(f"{path}:{line_no}: expected node-id,class-index")
        try:
            orig, cls = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"{path}:{line_no}: malformed row") from None
        if orig not in g.rank_of:
            raise DataError(f"{path}:{line_no}: unknown node {orig}")
        rank = g.rank_of[orig]
        if classes[rank] >= 0:
            raise DataError(f"{path}:{line_no}: duplicate row for node {orig}")
        if cls < 0:
            raise DataError(f"{path}:{line_no}: negative class {cls}")
        classes[rank] = cls
    if np.any(classes[1:] < 0):
        missing = g.to_original(int(np.flatnonzero(classes[1:] < 0)[0] + 1))
        raise DataError(f"{path}: missing class for node {missing}")
    present = np.unique(classes[1:])
    if not np.array_equal(present, np.arange(present.size)):
        raise DataError(f"{path}: class indices not contiguous from 0: {present.tolist()}")
    return classes


def make_splits(n: int, seed: int) -> np.ndarray:
    """60/20/20 random split as int8 codes 0/1/2 of length n+1 (slot 0 = -1):
    floor(0.6n) train, floor(0.2n) valid, remainder test."""
    if n < 5:
        raise DataError(f"n={n} too small to split")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    order = rng.permutation(n)
    n_train = int(0.6 * n)
    n_valid = int(0.2 * n)
    splits = np.full(n + 1, -1, dtype=np.int8)
    body = np.empty(n, dtype=np.int8)
    body[order[:n_train]] = 0
    body[order[n_train : n_train + n_valid]] = 1
    body[order[n_train + n_valid :]] = 2
    splits[1:] = body
    return splits


def write_rank_csv(values: np.ndarray, path, render) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rank in range(1, values.shape[0]):
            fh.write(f"{rank},{render(values[rank])}\n")


def read_rank_classes(path, n: int) -> np.ndarray:
    classes = np.full(n + 1, -1, dtype=np.int32)
    for line_no, parts in _data_rows(path):
        if len(parts) != 2:
            raise DataError(f"{path}:{line_no}: expected rank,class-index")
        rank, cls = int(parts[0]), int(parts[1])
        if not 1 <= rank <= n or classes[rank] >= 0 or cls < 0:
            raise DataError(f"{path}:{line_no}: bad rank or class")
        classes[rank] = cls
    if np.any(classes[1:] < 0):
        raise DataError(f"{path}: missing ranks")
    return classes


def read_rank_splits(path, n: int) -> np.ndarray:
    splits = np.full(n + 1, -1, dtype=np.int8)
    for line_no, parts in _data_rows(path):
        if len(parts) != 2:
            raise DataError(f"{path}:{line_no}: expected rank,tag")
        rank = int(parts[0])
        tag = parts[1]
        if tag not in SPLIT_TAGS or not 1 <= rank <= n or splits[rank] >= 0:
            raise DataError(f"{path}:{line_no}: bad rank or tag")
        splits[rank] = SPLIT_TAGS.index(tag)
    if np.any(splits[1:] < 0):
        raise DataError(f"{path}: missing ranks")
    return splits


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def export_bundle(
    out_dir,
    tokens: np.ndarray,
    bias: np.ndarray,
    features: np.ndarray,
    classes: np.ndarray,
    splits: np.ndarray,
    config: dict,
) -> Path:
    """Write the five data files, then the manifest; returns the manifest
    path. Inputs must agree on n; the manifest is the completion marker,
    so a crash mid-export leaves no manifest behind."""
    from .bias import write_bias
    from .sampler import write_tokens

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = tokens.shape[0] - 1
    token_len = tokens.shape[1]
    if bias.shape != (n + 1, token_len, token_len):
        raise BundleError(f"bias shape {bias.shape} inconsistent with tokens")
    if features.shape[0] - 1 != n or classes.shape[0] - 1 != n or splits.shape[0] - 1 != n:
        raise BundleError("inputs disagree on node count")
    width = features.shape[1]
    if width == 0:
        raise DataError("empty feature matrix (width 0) rejected")
    present = np.unique(classes[1:])
    if not np.array_equal(present, np.arange(present.size)):
        raise DataError(f"class indices not contiguous from 0: {present.tolist()}")

    write_tokens(tokens, out / "tokens.dhtk")
    write_bias(bias, out / "bias.dhbs")
    write_features(features, out / "features.dhft")
    write_rank_csv(classes, out / "classes.csv", lambda c: str(int(c)))
    write_rank_csv(splits, out / "splits.csv", lambda s: SPLIT_TAGS[int(s)])

    lines = [
        "format=hopcover-bundle-1",
        f"n={n}",
        f"token_len={token_len}",
        f"feature_width={width}",
        f"classes={present.size}",
        "id_space=rank",
    ]
    for key in sorted(config):
        lines.append(f"{key}={config[key]}")
    for name in BUNDLE_FILES:
        lines.append(f"sha256:{name}={_sha256(out / name)}")
    manifest = out / MANIFEST_NAME
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def verify_bundle(bundle_dir) -> dict:
    """Re-hash every file and cross-check headers against the manifest.

    Raises BundleError on the first inconsistency; returns a summary dict
    {n, token_len, feature_width, classes, config} on success."""
    from .bias import read_bias
    from .sampler import read_tokens

    root = Path(bundle_dir)
    manifest = root / MANIFEST_NAME
    if not manifest.is_file():
        raise BundleError(f"{root}: missing {MANIFEST_NAME}")
    fields: dict[str, str] = {}
    checksums: dict[str, str] = {}
    for line in manifest.read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        key, _, value = line.partition("=")
        if key.startswith("sha256:"):
            checksums[key[len("sha256:") :]] = value
        else:
            fields[key] = value
    if fields.get("format") != "hopcover-bundle-1":
        raise BundleError(f"{root}: unrecognized manifest format")
    for name in BUNDLE_FILES:
        path = root / name
        if not path.is_file():
            raise BundleError(f"{root}: missing {name}")
        if name not in checksums:
            raise BundleError(f"{root}: manifest lacks checksum for {name}")
        actual = _sha256(path)
        if actual != checksums[name]:
            raise BundleError(f"{root}: checksum mismatch for {name}")

    n = int(fields["n"])
    token_len = int(fields["token_len"])
    tokens = read_tokens(root / "tokens.dhtk")
    if tokens.shape != (n + 1, token_len):
        raise BundleError(f"{root}: token header disagrees with manifest")
    bias = read_bias(root / "bias.dhbs")
    if bias.shape != (n + 1, token_len, token_len):
        raise BundleError(f"{root}: bias header disagrees with manifest")
    feats = read_features(root / "features.dhft")
    if feats.shape != (n + 1, int(fields["feature_width"])):
        raise BundleError(f"{root}: feature header disagrees with manifest")
    classes = read_rank_classes(root / "classes.csv", n)
    if int(classes[1:].max()) + 1 != int(fields["classes"]):
        raise BundleError(f"{root}: class count disagrees with manifest")
    read_rank_splits(root / "splits.csv", n)

    config = {
        k: v
        for k, v in fields.items()
        if k not in {"format", "n", "token_len", "feature_width", "classes", "id_space"}
    }
    return {
        "n": n,
        "token_len": token_len,
        "feature_width": int(fields["feature_width"]),
        "classes": int(fields["classes"]),
        "config": config,
    }

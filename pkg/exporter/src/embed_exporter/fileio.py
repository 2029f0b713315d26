"""Embedding-file writer/reader implementing the shared binary contract.

Layout (little-endian): b"SEMB", u32 version (1), u64 N, u64 p, N*p float32
row-major, then an optional label block (u64 count == N, count u32 labels).
This is the exporter's own implementation of the public format; the consumer
toolkit's reader is the byte-level oracle in the tests.
"""

import json
import struct
from pathlib import Path

import numpy as np

__all__ = ["write_embeddings", "read_embeddings", "read_dataset", "map_labels"]

MAGIC = b"SEMB"
VERSION = 1


def write_embeddings(path, rows: np.ndarray, labels=None) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise ValueError(f"need a non-empty 2-D row matrix, got shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise ValueError("refusing to write non-finite embedding components")
    n, p = rows.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<QQ", n, p))
        f.write(rows.tobytes())
        if labels is not None:
            labels = np.ascontiguousarray(labels, dtype="<u4")
            if len(labels) != n:
                raise ValueError(f"{len(labels)} labels for {n} rows")
            f.write(struct.pack("<Q", n))
            f.write(labels.tobytes())


def read_embeddings(path):
    """Returns (rows, labels_or_None)."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    n, p = struct.unpack_from("<QQ", raw, 8)
    end = 24 + n * p * 4
    if len(raw) < end:
        raise ValueError(f"{path}: truncated payload")
    rows = np.frombuffer(raw[24:end], dtype="<f4").reshape(n, p).copy()
    if len(raw) == end:
        return rows, None
    (count,) = struct.unpack_from("<Q", raw, end)
    if count != n or len(raw) != end + 8 + 4 * count:
        raise ValueError(f"{path}: malformed label block")
    labels = np.frombuffer(raw[end + 8 :], dtype="<u4").astype(np.int64)
    return rows, labels


def read_dataset(path):
    """JSONL records {"text": ..., "label": ...}; errors carry line numbers."""
    texts, labels = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                texts.append(str(record["text"]))
                labels.append(str(record["label"]))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ValueError(f"{path} line {lineno}: bad record ({e})") from None
    if not texts:
        raise ValueError(f"{path}: no records")
    return texts, labels


def map_labels(raw_labels):
    """Dense ids in sorted label-string order (same rule as the consumer)."""
    classes = sorted(set(raw_labels))
    mapping = {c: i for i, c in enumerate(classes)}
    return np.array([mapping[l] for l in raw_labels], dtype=np.int64), classes

"""File formats, dataset ingestion, and the embedding-service client.

Embedding file layout (little-endian throughout):

    magic   4 bytes  b"SEMB"
    version u32      currently 1
    N       u64      row count
    p       u64      embedding dimension
    payload N*p float32, row-major
    labels  optional: u64 count (== N) followed by count u32 labels

A file without the label block loads as an EmbeddingMemory; with it, as
LabeledEmbeddings. Headers are validated before any allocation sized from
untrusted fields.
"""

import json
import struct
import time

import numpy as np
import requests

from .core import EmbeddingMemory, LabeledEmbeddings
from .errors import DesyncError, FormatError, ProtocolError, ServiceError

__all__ = [
    "MAGIC",
    "VERSION",
    "read_embedding_file",
    "write_embedding_file",
    "read_dataset",
    "map_labels",
    "select_test_subset",
    "fetch_embeddings",
]

MAGIC = b"SEMB"
VERSION = 1
# Generous ceiling on N*p so a corrupt header cannot trigger a huge allocation.
DEFAULT_MAX_ELEMENTS = 200_000_000


def write_embedding_file(data, path) -> None:
    """Serialize an EmbeddingMemory or LabeledEmbeddings; deterministic bytes."""
    if isinstance(data, LabeledEmbeddings):
        rows, labels = data.embeddings, data.labels
    elif isinstance(data, EmbeddingMemory):
        rows, labels = data.rows, None
    else:
        raise TypeError(f"cannot serialize {type(data).__name__}")

    n, p = rows.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<QQ", n, p))
        f.write(np.ascontiguousarray(rows, dtype="<f4").tobytes())
        if labels is not None:
            f.write(struct.pack("<Q", len(labels)))
            f.write(np.ascontiguousarray(labels, dtype="<u4").tobytes())


def read_embedding_file(path, max_elements: int = DEFAULT_MAX_ELEMENTS):
    """Inverse of write_embedding_file: exact values, exact order."""
    with open(path, "rb") as f:
        raw = f.read()

    if raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}", offset=0)
    if len(raw) < 24:
        raise FormatError("header truncated", offset=len(raw))
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    n, p = struct.unpack_from("<QQ", raw, 8)
    if n < 1 or p < 1:
        raise FormatError(f"row count {n} and dim {p} must be >= 1", offset=8)
    if n * p > max_elements:
        raise FormatError(f"{n}x{p} exceeds the {max_elements}-element cap", offset=8)

    payload_end = 24 + n * p * 4
    if len(raw) < payload_end:
        raise FormatError(
            f"payload needs {n * p * 4} bytes, file has {len(raw) - 24}", offset=len(raw)
        )
    rows = np.frombuffer(raw[24:payload_end], dtype="<f4").reshape(n, p)

    if len(raw) == payload_end:
        return EmbeddingMemory(rows.copy())

    if len(raw) < payload_end + 8:
        raise FormatError("label block header truncated", offset=payload_end)
    (count,) = struct.unpack_from("<Q", raw, payload_end)
    if count != n:
        raise FormatError(f"label count {count} != row count {n}", offset=payload_end)
    labels_end = payload_end + 8 + count * 4
    if len(raw) != labels_end:
        raise FormatError(
            f"expected file of {labels_end} bytes, got {len(raw)}", offset=labels_end
        )
    labels = np.frombuffer(raw[payload_end + 8 : labels_end], dtype="<u4")
    return LabeledEmbeddings(rows.copy(), labels.astype(np.int64))


def read_dataset(path):
    """Newline-delimited {"text": ..., "label": ...} records."""
    texts, raw_labels = [], []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                text, label = record["text"], record["label"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise FormatError(f"{path} line {lineno}: bad record ({e})") from None
            texts.append(str(text))
            raw_labels.append(str(label))
    if not texts:
        raise FormatError(f"{path}: no records")
    return texts, raw_labels


def map_labels(raw_labels):
    """Dense integer labels 0..C-1, assigned in sorted label-string order."""
    classes = sorted(set(raw_labels))
    mapping = {name: i for i, name in enumerate(classes)}
    return np.array([mapping[l] for l in raw_labels], dtype=np.int64), classes


def select_test_subset(labels, cap: int, seed: int = 0) -> np.ndarray:
    """Seed-deterministic, class-balanced sample of at most cap indices.

    Each class contributes cap // C indices where it can; any shortfall is
    topped up from the remaining pool so the total reaches cap when possible.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if len(labels) <= cap:
        return np.arange(len(labels))
    rng = np.random.Generator(np.random.PCG64(seed))
    classes = np.unique(labels)
    quota = cap // len(classes)
    chosen = []
    leftovers = []
    for c in classes:
        pool = np.flatnonzero(labels == c)
        pool = pool[rng.permutation(len(pool))]
        chosen.append(pool[:quota])
        leftovers.append(pool[quota:])
    chosen = np.concatenate(chosen)
    shortfall = cap - len(chosen)
    if shortfall > 0:
        spare = np.concatenate([l for l in leftovers if len(l)])
        spare = spare[rng.permutation(len(spare))]
        chosen = np.concatenate([chosen, spare[:shortfall]])
    return np.sort(chosen)


def fetch_embeddings(
    texts,
    service_url: str,
    batch_size: int = 32,
    max_retries: int = 3,
    backoff: float = 0.2,
    timeout: float = 60.0,
):
    """Embed texts through the /v1/embed endpoint, order preserved.

    Transient failures (connection errors, 5xx) are retried with bounded
    exponential backoff; other non-success statuses raise immediately.
    Dimension disagreement across batches is a protocol error.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    texts = list(texts)
    if not texts:
        return []

    endpoint = service_url.rstrip("/") + "/v1/embed"
    vectors = []
    dim = None
    for start in range(0, len(texts), batch_size):
        batch = texts[start : start + batch_size]
        payload = _post_with_retries(endpoint, batch, max_retries, backoff, timeout)
        got = payload.get("embeddings")
        batch_dim = payload.get("dim")
        if not isinstance(got, list) or len(got) != len(batch):
            raise ProtocolError(
                f"service returned {len(got) if isinstance(got, list) else 'no'} "
                f"vectors for a {len(batch)}-text batch"
            )
        for vec in got:
            if dim is None:
                dim = len(vec)
            if len(vec) != dim or (batch_dim is not None and batch_dim != dim):
                raise ProtocolError(
                    f"embedding dimension changed mid-stream ({len(vec)} vs {dim})"
                )
            vectors.append(np.asarray(vec, dtype=np.float32))
    return vectors


def _post_with_retries(endpoint, batch, max_retries, backoff, timeout):
    last_error = None
    for attempt in range(max_retries + 1):
        try:
            resp = requests.post(endpoint, json={"texts": batch}, timeout=timeout)
        except requests.RequestException as e:
            last_error = ServiceError(f"embedding service unreachable: {e}")
        else:
            if resp.status_code == 200:
                try:
                    return resp.json()
                except ValueError as e:
                    raise ProtocolError(f"service returned non-JSON body: {e}") from None
            if resp.status_code >= 500:
                last_error = ServiceError(f"service error {resp.status_code}: {resp.text[:200]}")
            else:
                raise ServiceError(f"service rejected request ({resp.status_code}): {resp.text[:200]}")
        if attempt < max_retries:
            time.sleep(backoff * (2**attempt))
    raise last_error


def check_corpus_labels(dataset_labels: np.ndarray, file_labels: np.ndarray, what: str):
    """Dataset and embedding-file labels must agree row for row."""
    if not np.array_equal(np.asarray(dataset_labels), np.asarray(file_labels)):
        raise DesyncError(f"{what}: dataset labels disagree with embedding-file labels")

"""Embedding containers, the semantic distance/distortion metrics, and the
nearest-row quantizer.

Embeddings are stored as float32 (the usual sentence-encoder output width)
and all distance accumulation happens in float64 through numpy's fixed
pairwise reduction, so identical input files give bit-identical distances on
the encoder and decoder sides. No BLAS reductions are used anywhere on these
paths: BLAS results can vary with thread count, which would break the
index agreement the pipelines rely on.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EmbeddingMemory",
    "LabeledEmbeddings",
    "as_embedding",
    "semantic_distance",
    "semantic_distortion",
    "quantize_index",
    "quantize_batch",
    "sq_distances_to_rows",
]


def as_embedding(values) -> np.ndarray:
    """Coerce a sequence of reals into a 1-D float32 embedding vector."""
    vec = np.asarray(values, dtype=np.float32)
    if vec.ndim != 1:
        raise ValueError(f"embedding must be 1-D, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("embedding has non-finite components")
    return vec


def _as_rows(values, what: str) -> np.ndarray:
    rows = np.asarray(values, dtype=np.float32)
    if rows.ndim != 2:
        raise ValueError(f"{what} must be a 2-D array, got shape {rows.shape}")
    if rows.shape[0] < 1:
        raise ValueError(f"{what} must have at least one row")
    if not np.all(np.isfinite(rows)):
        raise ValueError(f"{what} has non-finite components")
    return rows


@dataclass
class EmbeddingMemory:
    """The N x p matrix of previously coded message embeddings shared by
    encoder and decoder; doubles as the quantization codebook."""

    rows: np.ndarray
    _rows64: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.rows = _as_rows(self.rows, "memory")
        self.rows.setflags(write=False)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def rows64(self) -> np.ndarray:
        """float64 view used for accumulation; cached, never mutated."""
        if self._rows64 is None:
            self._rows64 = self.rows.astype(np.float64)
            self._rows64.setflags(write=False)
        return self._rows64

    def truncate(self, n: int) -> "EmbeddingMemory":
        """First-n-rows prefix, used by memory-size sweeps."""
        if not 1 <= n <= self.n:
            raise ValueError(f"cannot truncate memory of {self.n} rows to {n}")
        return EmbeddingMemory(self.rows[:n].copy())

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.array(self.rows.shape, dtype="<u8").tobytes())
        h.update(np.ascontiguousarray(self.rows, dtype="<f4").tobytes())
        return h.hexdigest()


@dataclass
class LabeledEmbeddings:
    """Decoder-side training embeddings with their class labels."""

    embeddings: np.ndarray
    labels: np.ndarray
    n_classes: int = 0

    def __post_init__(self):
        self.embeddings = _as_rows(self.embeddings, "train embeddings")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1 or len(self.labels) != len(self.embeddings):
            raise ValueError(
                f"labels length {self.labels.shape} does not match "
                f"{len(self.embeddings)} embeddings"
            )
        if np.any(self.labels < 0):
            raise ValueError("labels must be non-negative")
        if self.n_classes == 0:
            self.n_classes = int(self.labels.max()) + 1
        elif int(self.labels.max()) >= self.n_classes:
            raise ValueError(
                f"label {int(self.labels.max())} >= declared class count {self.n_classes}"
            )
        self.embeddings.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def m(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]


def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")


def semantic_distance(a, b) -> float:
    """Squared L2 distance between two embeddings.

    This is the metric the cluster similarities and the KNN decoder use.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    _check_dims(av, bv)
    d = av - bv
    return float(np.sum(d * d))


def semantic_distortion(q, qhat) -> float:
    """Unsquared L2 distance: how far a reconstructed embedding drifted.

    The square of this value equals :func:`semantic_distance`; argmins under
    either form agree, so the quantizer may work with the squared form.
    """
    return float(np.sqrt(semantic_distance(q, qhat)))


def sq_distances_to_rows(q, rows64: np.ndarray) -> np.ndarray:
    """Squared distances from one query to every row, accumulated in float64.

    ``rows64`` must already be float64; pass ``EmbeddingMemory.rows64``.
    """
    qv = np.asarray(q, dtype=np.float64)
    _check_dims(qv, rows64)
    d = rows64 - qv
    return np.sum(d * d, axis=1)


def quantize_index(q, memory: EmbeddingMemory) -> int:
    """Index of the memory row with minimum distortion; lowest index on ties."""
    if memory.n == 0:
        raise ValueError("cannot quantize against an empty memory")
    dists = sq_distances_to_rows(q, memory.rows64)
    return int(np.argmin(dists))


def quantize_batch(queries, memory: EmbeddingMemory) -> np.ndarray:
    """Row-by-row :func:`quantize_index`; results are order-independent."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    _check_dims(queries, memory.rows)
    out = np.empty(len(queries), dtype=np.int64)
    for i, q in enumerate(queries):
        out[i] = quantize_index(q, memory)
    return out

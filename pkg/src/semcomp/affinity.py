"""Exemplar clustering of the embedding memory by message passing.

Responsibilities score how strongly a point wants another as its exemplar;
availabilities score how ready a candidate is to serve. Both are damped and
iterated to a fixed point over a similarity matrix of negated squared
distances, with the shared preference on the diagonal.

Everything here is deterministic: tie-breaking noise comes from a
counter-based hash of (seed, i, k), not ambient RNG state, so two processes
given the same memory file and config always build the same clustering.
That agreement is what lets the encoder transmit bare cluster labels.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .core import EmbeddingMemory, sq_distances_to_rows
from .errors import DegenerateClusteringError

__all__ = [
    "APConfig",
    "SimilarityMatrix",
    "ClusterModel",
    "build_similarity",
    "update_responsibility",
    "update_availability",
    "run",
    "run_from_similarity",
    "assign_to_exemplar",
    "assign_batch",
]

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class APConfig:
    damping: float = 0.5
    max_iterations: int = 500
    convergence_window: int = 50
    jitter_seed: int = 0
    jitter_scale: float = 1e-9

    def __post_init__(self):
        if not 0.5 <= self.damping < 1.0:
            raise ValueError("damping must be in [0.5, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 1 <= self.convergence_window <= self.max_iterations:
            raise ValueError("convergence_window must be in [1, max_iterations]")
        if not 0 <= self.jitter_seed < 2**64:
            raise ValueError("jitter_seed must fit in 64 bits")
        if not 0.0 <= self.jitter_scale < 1.0:
            raise ValueError("jitter_scale must be in [0, 1) to preserve similarity signs")


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, vectorized over uint64 arrays."""
    with np.errstate(over="ignore"):
        z = (z + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
        z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
        z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
        return z ^ (z >> np.uint64(31))


def tie_break_unit(seed: int, i, k) -> np.ndarray:
    """Deterministic pseudo-random values in [-1, 1) from (seed, i, k).

    Asymmetric in (i, k) on purpose: symmetric inputs deadlock the message
    updates, so even exchanging a pair of rows must perturb differently.
    """
    i = np.asarray(i, dtype=np.uint64)
    k = np.asarray(k, dtype=np.uint64)
    h = _mix64(_mix64(_mix64(np.uint64(seed)) ^ i) ^ k)
    u01 = (h >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return 2.0 * u01 - 1.0


@dataclass
class SimilarityMatrix:
    """Pairwise similarities with the preference on the diagonal."""

    s: np.ndarray
    preference: float

    @property
    def n(self) -> int:
        return self.s.shape[0]


def build_similarity(
    memory: EmbeddingMemory, config: APConfig, preference: float | None = None
) -> SimilarityMatrix:
    """Negated squared distances off-diagonal, median preference on-diagonal.

    Each off-diagonal entry is perturbed multiplicatively by at most
    jitter_scale of its magnitude, keyed by (jitter_seed, i, k), to break
    exact ties reproducibly. The median is taken before jittering. Pass
    ``preference`` to override the median rule, e.g. after a degenerate
    clustering.
    """
    n = memory.n
    if n < 2:
        raise ValueError("similarity needs at least 2 memory rows")
    rows64 = memory.rows64
    s = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        s[i] = -sq_distances_to_rows(rows64[i], rows64)

    off_diag = s[~np.eye(n, dtype=bool)]
    if preference is None:
        preference = float(np.median(off_diag))

    if config.jitter_scale > 0.0:
        ii, kk = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        jitter = tie_break_unit(config.jitter_seed, ii, kk)
        s *= 1.0 + config.jitter_scale * jitter
    np.fill_diagonal(s, preference)
    return SimilarityMatrix(s, preference)


def update_responsibility(
    s: np.ndarray, a: np.ndarray, r: np.ndarray, damping: float
) -> np.ndarray:
    """One damped responsibility sweep (synchronous over the full matrix)."""
    n = s.shape[0]
    comp = a + s
    best_idx = np.argmax(comp, axis=1)
    rows = np.arange(n)
    best = comp[rows, best_idx]
    comp[rows, best_idx] = -np.inf
    second = comp.max(axis=1)
    # For each (i, k), the max over k' != k is `best` unless k is itself
    # the argmax, in which case the runner-up applies.
    cap = np.broadcast_to(best[:, None], (n, n)).copy()
    cap[rows, best_idx] = second
    return (1.0 - damping) * (s - cap) + damping * r


def update_availability(r: np.ndarray, a: np.ndarray, damping: float) -> np.ndarray:
    """One damped availability sweep (synchronous over the full matrix)."""
    n = r.shape[0]
    rpos = np.maximum(r, 0.0)
    col_pos = rpos.sum(axis=0)
    diag_r = np.diag(r)
    diag_rpos = np.diag(rpos)
    # off-diagonal: min(0, r(k,k) + sum over i' not in {i,k} of max(0, r(i',k)))
    new = diag_r[None, :] + col_pos[None, :] - rpos - diag_rpos[None, :]
    np.minimum(new, 0.0, out=new)
    # self-availability: total positive support from other rows
    np.fill_diagonal(new, col_pos - diag_rpos)
    return (1.0 - damping) * new + damping * a


@dataclass
class ClusterModel:
    """Clustering result: exemplar rows, a label per memory row, cluster sizes.

    Labels are 0..K-1 in ascending exemplar row order, so both sides number
    clusters identically without negotiation.
    """

    exemplar_indices: np.ndarray
    labels: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        self.exemplar_indices = np.asarray(self.exemplar_indices, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        k = len(self.exemplar_indices)
        if k == 0:
            raise ValueError("cluster model needs at least one exemplar")
        if np.any(np.diff(self.exemplar_indices) <= 0):
            raise ValueError("exemplar indices must be sorted and distinct")
        if np.any((self.labels < 0) | (self.labels >= k)):
            raise ValueError("labels must lie in [0, K)")
        if not np.array_equal(self.labels[self.exemplar_indices], np.arange(k)):
            raise ValueError("each exemplar must carry its own label")
        if int(self.sizes.sum()) != len(self.labels) or np.any(self.sizes <= 0):
            raise ValueError("sizes must be positive and sum to N")
        self.exemplar_indices.setflags(write=False)
        self.labels.setflags(write=False)
        self.sizes.setflags(write=False)

    @property
    def n_clusters(self) -> int:
        return len(self.exemplar_indices)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.exemplar_indices, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        return h.hexdigest()

    def to_dict(self) -> dict:
        return {
            "exemplar_indices": self.exemplar_indices.tolist(),
            "labels": self.labels.tolist(),
            "sizes": self.sizes.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterModel":
        return cls(d["exemplar_indices"], d["labels"], d["sizes"])


def run_from_similarity(sim: SimilarityMatrix, config: APConfig) -> ClusterModel:
    """Iterate the message updates from zero until the exemplar set holds
    still for convergence_window sweeps (or max_iterations)."""
    s = sim.s
    n = sim.n
    a = np.zeros((n, n), dtype=np.float64)
    r = np.zeros((n, n), dtype=np.float64)
    prev_flags = np.zeros(n, dtype=bool)
    stable = 0
    for _ in range(config.max_iterations):
        r = update_responsibility(s, a, r, config.damping)
        a = update_availability(r, a, config.damping)
        flags = (np.diag(r) + np.diag(a)) > 0.0
        if np.array_equal(flags, prev_flags):
            stable += 1
            if stable >= config.convergence_window:
                break
        else:
            stable = 0
            prev_flags = flags

    exemplars = np.flatnonzero(prev_flags if stable else flags)
    if len(exemplars) == 0:
        raise DegenerateClusteringError(
            "no exemplars emerged; raise the preference and rerun"
        )
    labels = np.argmax(s[:, exemplars], axis=1)
    labels[exemplars] = np.arange(len(exemplars))
    sizes = np.bincount(labels, minlength=len(exemplars))
    return ClusterModel(exemplars, labels, sizes)


def run(memory: EmbeddingMemory, config: APConfig) -> ClusterModel:
    """Cluster the memory; identical memory bytes + config give an identical
    model, which is what keeps encoder and decoder label books in sync."""
    return run_from_similarity(build_similarity(memory, config), config)


def assign_to_exemplar(q, model: ClusterModel, memory: EmbeddingMemory) -> int:
    """Cluster label of the exemplar nearest to a fresh query.

    Queries are labeled against the fixed exemplar set rather than by
    re-clustering; ties go to the lowest exemplar index.
    """
    ex_rows = memory.rows64[model.exemplar_indices]
    dists = sq_distances_to_rows(q, ex_rows)
    return int(np.argmin(dists))


def assign_batch(queries, model: ClusterModel, memory: EmbeddingMemory) -> np.ndarray:
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    out = np.empty(len(queries), dtype=np.int64)
    for i, q in enumerate(queries):
        out[i] = assign_to_exemplar(q, model, memory)
    return out

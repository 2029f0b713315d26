"""K-nearest-neighbor classification in embedding space.

Exact scan, no index structures: the training sets here are small enough
that a vectorized linear pass wins, and exactness keeps predictions
reproducible. Every tie is pinned: neighbors tied at the k-th rank go to the
lower training index, vote ties go to the label with the smaller summed
distance, then to the lower label id.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import LabeledEmbeddings, sq_distances_to_rows

__all__ = ["KnnModel", "predict", "predict_batch"]


@dataclass
class KnnModel:
    train: LabeledEmbeddings
    k: int = 15
    _train64: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.train.m < 1:
            raise ValueError("cannot build a KNN model without training rows")
        if not 1 <= self.k <= self.train.m:
            raise ValueError(f"k={self.k} must be in [1, {self.train.m}]")

    @property
    def train64(self) -> np.ndarray:
        if self._train64 is None:
            self._train64 = self.train.embeddings.astype(np.float64)
        return self._train64


def predict(q, model: KnnModel) -> int:
    """Majority label among the k nearest training embeddings."""
    dists = sq_distances_to_rows(q, model.train64)
    # Stable sort on distance == ties broken by lower train index.
    order = np.argsort(dists, kind="stable")[: model.k]
    votes = model.train.labels[order]
    counts = np.bincount(votes, minlength=model.train.n_classes)
    top = counts.max()
    candidates = np.flatnonzero(counts == top)
    if len(candidates) == 1:
        return int(candidates[0])
    summed = np.zeros(len(candidates), dtype=np.float64)
    neighbor_d = dists[order]
    for j, label in enumerate(candidates):
        summed[j] = neighbor_d[votes == label].sum()
    # candidates are ascending, so argmin's first-hit rule is the final
    # lower-label tie-break
    return int(candidates[np.argmin(summed)])


def predict_batch(queries, model: KnnModel) -> np.ndarray:
    """Element-wise predict, order preserving."""
    queries = np.asarray(queries, dtype=np.float64)
    if queries.size == 0:
        return np.empty(0, dtype=np.int64)
    queries = np.atleast_2d(queries)
    return np.array([predict(q, model) for q in queries], dtype=np.int64)

"""2-D projection of an embedding file for scatter plotting."""

import csv

import numpy as np

from .fileio import read_embeddings

__all__ = ["project_2d", "pca_2d"]


def pca_2d(rows: np.ndarray) -> np.ndarray:
    centered = rows.astype(np.float64) - rows.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return centered @ vt[:2].T


def _umap_2d(rows: np.ndarray) -> np.ndarray:
    try:
        import umap
    except ImportError:
        raise ValueError(
            "method 'umap' needs the umap-learn package; 'pca' has no extra deps"
        ) from None
    return umap.UMAP(n_components=2, random_state=0).fit_transform(rows)


_METHODS = {"pca": pca_2d, "umap": _umap_2d}


def project_2d(embedding_path, out_csv, method: str = "pca") -> int:
    """Write one (x, y, label) row per embedding; returns the row count.

    The label column is empty when the file carries no labels.
    """
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}; available: {sorted(_METHODS)}")
    rows, labels = read_embeddings(embedding_path)
    points = _METHODS[method](rows)
    with open(out_csv, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["x", "y", "label"])
        for i in range(len(points)):
            label = "" if labels is None else int(labels[i])
            writer.writerow([repr(float(points[i, 0])), repr(float(points[i, 1])), label])
    return len(points)

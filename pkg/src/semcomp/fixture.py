"""Bundled synthetic 3-class fixture.

Embeddings are drawn from three well-separated Gaussian blobs, so that the
class margin dwarfs both the blob spread and the quantization distortion.
On this fixture every pipeline should classify perfectly and the bit
ordering compression < quantization < conventional(K=1) is strict, which
makes it the end-to-end smoke corpus and the determinism reference.
"""

import random

import numpy as np

from .core import EmbeddingMemory, LabeledEmbeddings
from .pipelines import Corpus

__all__ = ["FIXTURE_SEED", "generate_fixture"]

FIXTURE_SEED = 20240601

_WORDS = {
    0: ["market", "shares", "earnings", "trade", "bank", "growth", "profit", "deal"],
    1: ["match", "season", "coach", "league", "score", "title", "team", "final"],
    2: ["silicon", "software", "network", "launch", "device", "cloud", "chip", "code"],
}
# Separation-to-spread ratio chosen so the exemplar search settles at the
# default damping while the class margin still dwarfs quantization error.
_DIM = 16
_CENTER_SCALE = 10.0
_SPREAD = 1.0


def _centers() -> np.ndarray:
    centers = np.zeros((3, _DIM), dtype=np.float64)
    for c in range(3):
        centers[c, c] = _CENTER_SCALE
    return centers


def _blob(rng: np.random.Generator, center: np.ndarray, count: int) -> np.ndarray:
    return center + rng.normal(0.0, _SPREAD, size=(count, _DIM))


def _text(rng: random.Random, label: int, i: int) -> str:
    words = rng.choices(_WORDS[label], k=rng.randint(6, 10))
    return f"sample {i} " + " ".join(words)


def generate_fixture(
    seed: int = FIXTURE_SEED,
    memory_per_class: int = 30,
    train_per_class: int = 30,
    test_per_class: int = 20,
):
    """Deterministic (memory, train, corpus) triple; same seed, same bytes."""
    nrng = np.random.Generator(np.random.PCG64(seed))
    trng = random.Random(seed)
    centers = _centers()

    memory_rows = np.vstack([_blob(nrng, centers[c], memory_per_class) for c in range(3)])
    train_rows = np.vstack([_blob(nrng, centers[c], train_per_class) for c in range(3)])
    train_labels = np.repeat(np.arange(3), train_per_class)
    test_rows = np.vstack([_blob(nrng, centers[c], test_per_class) for c in range(3)])
    test_labels = np.repeat(np.arange(3), test_per_class)
    texts = [_text(trng, int(lab), i) for i, lab in enumerate(test_labels)]

    memory = EmbeddingMemory(memory_rows.astype(np.float32))
    train = LabeledEmbeddings(train_rows.astype(np.float32), train_labels)
    corpus = Corpus(texts, test_labels, test_rows.astype(np.float32))
    return memory, train, corpus

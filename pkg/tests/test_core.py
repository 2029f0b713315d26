import math

import numpy as np
import pytest

from semcomp.core import (
    EmbeddingMemory,
    LabeledEmbeddings,
    as_embedding,
    quantize_batch,
    quantize_index,
    semantic_distance,
    semantic_distortion,
)


def scan_quantize(q, rows):
    """Independent linear scan: exact fsum distances, lowest index wins."""
    best_idx, best = 0, math.inf
    for i, row in enumerate(rows):
        d = math.fsum((float(a) - float(b)) ** 2 for a, b in zip(q, row))
        if d < best:
            best, best_idx = d, i
    return best_idx


def reversed_order_distance(a, b):
    total = 0.0
    for d in range(len(a) - 1, -1, -1):
        diff = float(a[d]) - float(b[d])
        total += diff * diff
    return total


class TestSemanticDistance:
    def test_identity(self):
        assert semantic_distance([0.3, -0.7], [0.3, -0.7]) == 0.0

    def test_three_four_five_squared(self):
        assert semantic_distance([0, 0], [3, 4]) == 25.0

    def test_reversed_summation_oracle(self):
        rng = np.random.Generator(np.random.PCG64(7))
        a = rng.normal(size=768).astype(np.float32)
        b = rng.normal(size=768).astype(np.float32)
        got = semantic_distance(a, b)
        want = reversed_order_distance(a, b)
        assert got == pytest.approx(want, rel=1e-9)

    def test_symmetry_and_nonnegativity(self):
        rng = np.random.Generator(np.random.PCG64(8))
        for _ in range(20):
            a = rng.normal(size=12)
            b = rng.normal(size=12)
            assert semantic_distance(a, b) == semantic_distance(b, a)
            assert semantic_distance(a, b) >= 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            semantic_distance([1, 2], [1, 2, 3])


class TestSemanticDistortion:
    def test_identity(self):
        q = [0.5, 0.25, -1.0]
        assert semantic_distortion(q, q) == 0.0

    def test_three_four_five(self):
        assert semantic_distortion([0, 0], [3, 4]) == 5.0

    def test_square_equals_distance(self):
        rng = np.random.Generator(np.random.PCG64(9))
        for _ in range(50):
            a = rng.normal(size=32)
            b = rng.normal(size=32)
            assert semantic_distortion(a, b) ** 2 == pytest.approx(
                semantic_distance(a, b), rel=1e-9
            )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            semantic_distortion([1], [1, 2])


class TestQuantizeIndex:
    def test_two_point_argmin(self):
        memory = EmbeddingMemory(np.array([[0, 0], [3, 4]], dtype=np.float32))
        assert quantize_index([1, 1], memory) == 0

    def test_exact_row_wins(self):
        rng = np.random.Generator(np.random.PCG64(10))
        rows = rng.normal(size=(40, 8)).astype(np.float32)
        memory = EmbeddingMemory(rows)
        for k in (0, 7, 39):
            assert quantize_index(rows[k], memory) == k

    def test_brute_force_oracle(self):
        rng = np.random.Generator(np.random.PCG64(11))
        rows = rng.normal(size=(200, 16)).astype(np.float32)
        memory = EmbeddingMemory(rows)
        queries = rng.normal(size=(100, 16)).astype(np.float32)
        for q in queries:
            assert quantize_index(q, memory) == scan_quantize(q, rows)

    def test_self_quantization_identity(self):
        rng = np.random.Generator(np.random.PCG64(12))
        rows = rng.normal(size=(60, 6)).astype(np.float32)
        memory = EmbeddingMemory(rows)
        got = quantize_batch(rows, memory)
        assert np.array_equal(got, np.arange(60))

    def test_minimality_by_exhaustive_scan(self):
        rng = np.random.Generator(np.random.PCG64(13))
        rows = rng.normal(size=(30, 5)).astype(np.float32)
        memory = EmbeddingMemory(rows)
        q = rng.normal(size=5)
        idx = quantize_index(q, memory)
        chosen = semantic_distortion(q, rows[idx])
        for j in range(30):
            assert chosen <= semantic_distortion(q, rows[j])

    def test_argmin_invariant_under_monotone_transform(self):
        # squared and unsquared metrics must pick identical rows
        rng = np.random.Generator(np.random.PCG64(14))
        rows = rng.normal(size=(50, 4)).astype(np.float32)
        memory = EmbeddingMemory(rows)
        for _ in range(50):
            q = rng.normal(size=4)
            by_square = min(
                range(50), key=lambda i: (semantic_distance(q, rows[i]), i)
            )
            by_norm = min(
                range(50), key=lambda i: (semantic_distortion(q, rows[i]), i)
            )
            assert quantize_index(q, memory) == by_square == by_norm

    def test_dim_mismatch(self):
        memory = EmbeddingMemory(np.zeros((2, 3), dtype=np.float32))
        with pytest.raises(ValueError):
            quantize_index([1, 2], memory)

    def test_tie_breaks_to_lowest_index(self):
        memory = EmbeddingMemory(
            np.array([[1, 0], [1, 0], [5, 5]], dtype=np.float32)
        )
        assert quantize_index([1, 0], memory) == 0
        assert quantize_index([0, 0], memory) == 0


class TestContainers:
    def test_memory_rejects_empty(self):
        with pytest.raises(ValueError):
            EmbeddingMemory(np.zeros((0, 4), dtype=np.float32))

    def test_memory_rejects_nan(self):
        rows = np.ones((3, 2), dtype=np.float32)
        rows[1, 1] = np.nan
        with pytest.raises(ValueError):
            EmbeddingMemory(rows)

    def test_memory_stores_float32_accumulates_float64(self):
        memory = EmbeddingMemory(np.ones((2, 3)))
        assert memory.rows.dtype == np.float32
        assert memory.rows64.dtype == np.float64

    def test_truncate_is_prefix(self):
        rows = np.arange(20, dtype=np.float32).reshape(10, 2)
        memory = EmbeddingMemory(rows)
        assert np.array_equal(memory.truncate(4).rows, rows[:4])
        with pytest.raises(ValueError):
            memory.truncate(11)

    def test_labeled_embeddings_validation(self):
        with pytest.raises(ValueError):
            LabeledEmbeddings(np.ones((3, 2)), [0, 1])  # length mismatch
        with pytest.raises(ValueError):
            LabeledEmbeddings(np.ones((3, 2)), [0, -1, 1])
        with pytest.raises(ValueError):
            LabeledEmbeddings(np.ones((3, 2)), [0, 1, 5], n_classes=3)
        le = LabeledEmbeddings(np.ones((3, 2)), [0, 2, 1])
        assert le.n_classes == 3

    def test_as_embedding(self):
        vec = as_embedding([1.0, 2.0])
        assert vec.dtype == np.float32
        with pytest.raises(ValueError):
            as_embedding([[1.0], [2.0]])
        with pytest.raises(ValueError):
            as_embedding([1.0, float("inf")])

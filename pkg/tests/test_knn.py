import math

import numpy as np
import pytest

from semcomp.core import LabeledEmbeddings
from semcomp.knn import KnnModel, predict, predict_batch


def oracle_predict(q, train_rows, train_labels, k, n_classes):
    """Sorted-scan reference with the same tie cascade as the implementation:
    neighbors by (distance, index); votes; then (count desc, summed distance,
    label id)."""
    dists = [
        (math.fsum((float(a) - float(b)) ** 2 for a, b in zip(q, row)), i)
        for i, row in enumerate(train_rows)
    ]
    dists.sort()
    neighbors = dists[:k]
    counts = [0] * n_classes
    summed = [0.0] * n_classes
    for d, i in neighbors:
        lab = int(train_labels[i])
        counts[lab] += 1
        summed[lab] += d
    best = max(counts)
    candidates = [c for c in range(n_classes) if counts[c] == best]
    candidates.sort(key=lambda c: (summed[c], c))
    return candidates[0]


def make_blob_model(seed=0, per_class=40, dim=4, k=15, sep=50.0):
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = np.zeros((3, dim))
    centers[1, 0] = sep
    centers[2, 1] = sep
    rows = np.vstack([c + rng.normal(0, 1, (per_class, dim)) for c in centers])
    labels = np.repeat(np.arange(3), per_class)
    return KnnModel(LabeledEmbeddings(rows.astype(np.float32), labels), k)


class TestPredict:
    def test_k1_exact_row(self):
        rows = np.array([[0, 0], [5, 5], [9, 9]], dtype=np.float32)
        model = KnnModel(LabeledEmbeddings(rows, [1, 3, 0]), k=1)
        assert predict([5, 5], model) == 3

    def test_majority_beats_proximity(self):
        rows = np.array([[0.5, 0], [1.0, 0], [1.0, 0.1]], dtype=np.float32)
        labels = [0, 1, 1]
        model = KnnModel(LabeledEmbeddings(rows, labels), k=3)
        assert predict([0, 0], model) == 1

    def test_brute_force_oracle(self):
        rng = np.random.Generator(np.random.PCG64(1))
        rows = rng.normal(size=(120, 6)).astype(np.float32)
        labels = rng.integers(0, 4, size=120)
        train = LabeledEmbeddings(rows, labels)
        model = KnnModel(train, k=15)
        for _ in range(100):
            q = rng.normal(size=6)
            want = oracle_predict(q, rows, labels, 15, train.n_classes)
            assert predict(q, model) == want

    def test_separable_blobs_perfect(self):
        model = make_blob_model(seed=2)
        rng = np.random.Generator(np.random.PCG64(3))
        centers = np.zeros((3, 4))
        centers[1, 0] = 50.0
        centers[2, 1] = 50.0
        for c in range(3):
            queries = centers[c] + rng.normal(0, 1, (30, 4))
            got = predict_batch(queries, model)
            assert np.all(got == c)

    def test_purity(self):
        model = make_blob_model(seed=4)
        q = np.array([1.0, 2.0, 3.0, 4.0])
        assert predict(q, model) == predict(q.copy(), model)

    def test_train_permutation_invariance_when_distances_distinct(self):
        rng = np.random.Generator(np.random.PCG64(5))
        rows = rng.normal(size=(50, 3)).astype(np.float32)
        labels = rng.integers(0, 3, size=50)
        model = KnnModel(LabeledEmbeddings(rows, labels), k=7)
        perm = rng.permutation(50)
        permuted = KnnModel(
            LabeledEmbeddings(rows[perm], labels[perm], n_classes=3), k=7
        )
        for _ in range(40):
            q = rng.normal(size=3)
            assert predict(q, model) == predict(q, permuted)

    def test_kth_rank_distance_tie_prefers_lower_index(self):
        # three equidistant rows, k=2: rows 0 and 1 must win over row 2
        rows = np.array([[1, 0], [0, 1], [-1, 0]], dtype=np.float32)
        labels = [0, 1, 2]
        model = KnnModel(LabeledEmbeddings(rows, labels), k=2)
        # votes tie 1-1 between labels 0 and 1; equal summed distance,
        # so the lower label id wins
        assert predict([0, 0], model) == 0

    def test_vote_tie_smaller_summed_distance(self):
        rows = np.array([[1, 0], [3, 0], [-1.5, 0], [-2, 0]], dtype=np.float32)
        labels = [0, 0, 1, 1]
        model = KnnModel(LabeledEmbeddings(rows, labels), k=4)
        # label 0 sum: 1 + 9 = 10; label 1 sum: 2.25 + 4 = 6.25
        assert predict([0, 0], model) == 1

    def test_dim_mismatch(self):
        model = make_blob_model()
        with pytest.raises(ValueError):
            predict([1.0, 2.0], model)


class TestModelValidation:
    def test_k_bounds(self):
        train = LabeledEmbeddings(np.ones((5, 2), dtype=np.float32), [0, 1, 0, 1, 0])
        with pytest.raises(ValueError):
            KnnModel(train, k=0)
        with pytest.raises(ValueError):
            KnnModel(train, k=6)
        assert KnnModel(train, k=5).k == 5

    def test_default_k(self):
        rng = np.random.Generator(np.random.PCG64(6))
        train = LabeledEmbeddings(
            rng.normal(size=(20, 2)).astype(np.float32), [0] * 10 + [1] * 10
        )
        assert KnnModel(train).k == 15


class TestPredictBatch:
    def test_singleton_equals_predict(self):
        model = make_blob_model(seed=7)
        q = np.array([0.5, -0.5, 1.0, 0.0])
        assert predict_batch([q], model)[0] == predict(q, model)

    def test_empty_batch(self):
        model = make_blob_model(seed=8)
        assert len(predict_batch(np.empty((0, 4)), model)) == 0

    def test_permutation_of_queries_permutes_outputs(self):
        model = make_blob_model(seed=9)
        rng = np.random.Generator(np.random.PCG64(10))
        queries = rng.normal(0, 20, size=(25, 4))
        perm = rng.permutation(25)
        base = predict_batch(queries, model)
        shuffled = predict_batch(queries[perm], model)
        assert np.array_equal(shuffled, base[perm])

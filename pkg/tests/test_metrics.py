"""Ranking AUC, multi-label scores, and the logistic probe."""

import numpy as np
import pytest

from geomix.manifold import project_to_sphere
from geomix.metrics import (
    auc,
    classify,
    fit_ovr_logistic,
    hamming_loss,
    jaccard_index,
    micro_f1,
    multilabel_metrics,
    node_classification,
    predict_ovr_logistic,
    stratified_split,
    tangent_features,
)


def brute_auc(pos, neg):
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestAuc:
    def test_perfect_separation(self):
        assert auc([3.0, 4.0, 5.0], [0.0, 1.0, 2.0]) == 1.0

    def test_perfect_inversion(self):
        assert auc([0.0, 1.0], [2.0, 3.0]) == 0.0

    def test_all_tied_is_half(self):
        assert auc([1.0, 1.0, 1.0], [1.0, 1.0]) == 0.5

    def test_brute_force_five_by_five(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            pos = rng.integers(0, 6, size=5).astype(float)
            neg = rng.integers(0, 6, size=5).astype(float)
            assert auc(pos, neg) == pytest.approx(brute_auc(pos, neg), abs=1e-12)

    def test_monotone_invariance(self):
        rng = np.random.default_rng(1)
        pos = rng.standard_normal(20)
        neg = rng.standard_normal(25)
        base = auc(pos, neg)
        assert auc(3.0 * pos + 2.0, 3.0 * neg + 2.0) == pytest.approx(base, abs=1e-12)
        assert auc(np.tanh(pos), np.tanh(neg)) == pytest.approx(base, abs=1e-12)

    def test_complement_identity(self):
        rng = np.random.default_rng(2)
        a = rng.integers(0, 10, 15).astype(float)
        b = rng.integers(0, 10, 12).astype(float)
        assert auc(a, b) + auc(b, a) == pytest.approx(1.0, abs=1e-12)

    def test_empty_inputs_nan(self):
        assert np.isnan(auc([], [1.0]))
        assert np.isnan(auc([1.0], []))


class TestMultilabelScores:
    def test_perfect_prediction(self):
        y = np.array([[1, 0, 1], [0, 1, 0]], dtype=np.int8)
        ji, hl, f1 = multilabel_metrics(y, y)
        assert ji == 1.0
        assert hl == 0.0
        assert f1 == 1.0

    def test_complemented_prediction_has_full_hamming(self):
        y = np.array([[1, 0, 1, 0], [0, 1, 0, 0]], dtype=np.int8)
        ji, hl, f1 = multilabel_metrics(1 - y, y)
        assert hl == 1.0
        assert ji == 0.0
        assert f1 == 0.0

    def test_empty_sets_count_as_match(self):
        z = np.zeros((3, 4), dtype=np.int8)
        assert jaccard_index(z, z) == 1.0
        assert micro_f1(z, z) == 1.0
        assert hamming_loss(z, z) == 0.0

    def test_three_by_four_brute_force(self):
        # enumerate a deterministic subset of all (truth, pred) matrix pairs
        rng = np.random.default_rng(3)
        for _ in range(200):
            t = rng.integers(0, 2, size=(3, 4)).astype(np.int8)
            p = rng.integers(0, 2, size=(3, 4)).astype(np.int8)
            # reference formulas computed row by row / cell by cell
            ji_rows = []
            for i in range(3):
                inter = int(np.sum(t[i] & p[i]))
                union = int(np.sum(t[i] | p[i]))
                ji_rows.append(1.0 if union == 0 else inter / union)
            want_ji = float(np.mean(ji_rows))
            want_hl = float(np.mean(t != p))
            tp = int(np.sum((t == 1) & (p == 1)))
            fp = int(np.sum((t == 0) & (p == 1)))
            fn = int(np.sum((t == 1) & (p == 0)))
            want_f1 = 1.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
            ji, hl, f1 = multilabel_metrics(p, t)
            assert ji == pytest.approx(want_ji, abs=1e-12)
            assert hl == pytest.approx(want_hl, abs=1e-12)
            assert f1 == pytest.approx(want_f1, abs=1e-12)


class TestStratifiedSplit:
    def test_partition_and_proportions(self):
        labels = np.zeros((100, 2), dtype=np.int8)
        labels[:40, 0] = 1
        labels[40:, 1] = 1
        train, test = stratified_split(labels, seed=0)
        assert set(train) | set(test) == set(range(100))
        assert set(train) & set(test) == set()
        # each signature contributes ~80% to train
        assert np.sum(train < 40) == 32
        assert np.sum(train >= 40) == 48

    def test_singletons_go_to_train(self):
        labels = np.zeros((5, 3), dtype=np.int8)
        labels[0] = [1, 1, 1]  # unique signature
        labels[1:, 0] = 1
        train, test = stratified_split(labels, seed=1)
        assert 0 in train

    def test_pairs_split_one_and_one(self):
        labels = np.zeros((2, 1), dtype=np.int8)
        labels[:, 0] = 1
        train, test = stratified_split(labels, seed=2)
        assert train.size == 1 and test.size == 1

    def test_determinism(self):
        rng = np.random.default_rng(4)
        labels = rng.integers(0, 2, size=(60, 3)).astype(np.int8)
        a = stratified_split(labels, seed=5)
        b = stratified_split(labels, seed=5)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestLogisticProbe:
    def test_separable_data_high_train_accuracy(self):
        rng = np.random.default_rng(6)
        n = 120
        x = np.concatenate(
            [rng.standard_normal((n // 2, 4)) + 3.0, rng.standard_normal((n // 2, 4)) - 3.0]
        )
        y = np.zeros((n, 2), dtype=np.int8)
        y[: n // 2, 0] = 1
        y[n // 2 :, 1] = 1
        model = fit_ovr_logistic(x, y)
        pred = predict_ovr_logistic(model, x)
        acc = float((pred == y).mean())
        assert acc > 0.95

    def test_classify_returns_test_indices(self):
        rng = np.random.default_rng(7)
        x = np.concatenate(
            [rng.standard_normal((30, 3)) + 2.0, rng.standard_normal((30, 3)) - 2.0]
        )
        y = np.zeros((60, 2), dtype=np.int8)
        y[:30, 0] = 1
        y[30:, 1] = 1
        test_idx, pred = classify(x, y, seed=0)
        assert pred.shape == (test_idx.size, 2)
        assert test_idx.size == 12
        ji, hl, f1 = node_classification(x, y, seed=0)
        assert ji > 0.9
        assert hl < 0.1
        assert f1 > 0.9

    def test_determinism(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((40, 3))
        y = (rng.random((40, 2)) < 0.4).astype(np.int8)
        a = node_classification(x, y, seed=3)
        b = node_classification(x, y, seed=3)
        assert a == b


class TestTangentFeatures:
    def test_shapes_and_space_switches(self):
        rng = np.random.default_rng(9)
        w = 0.5
        z_s = project_to_sphere(rng.standard_normal((20, 3)), w)
        z_h = rng.standard_normal((20, 4)) * 0.3
        f = tangent_features(z_s, z_h, w)
        assert f.shape == (20, 7)
        # Euclidean switches pass the raw coordinates through
        fe = tangent_features(z_s, z_h, w, hom_space="E", rank_space="E")
        assert np.allclose(fe, np.concatenate([z_s, z_h], axis=1))

    def test_features_finite(self):
        rng = np.random.default_rng(10)
        w = 0.5
        z_s = project_to_sphere(rng.standard_normal((15, 3)), w)
        z_h = rng.standard_normal((15, 4)) * 0.8
        z_h = np.clip(z_h, -0.7, 0.7)
        f = tangent_features(z_s, z_h, w)
        assert np.all(np.isfinite(f))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelspace.base import (KnnSpec, LogisticSpec, base_fit, base_predict, base_predict_proba,
                             logistic_loss_grad)
from labelspace.sparse import FeatureMatrix

SYMMETRIC_X = [[-1.0], [1.0]]


class TestLogistic:
    def test_separable_by_sign(self):
        m = base_fit(LogisticSpec(200, 0.5, 0.0), SYMMETRIC_X, [0, 1])
        assert base_predict(m, SYMMETRIC_X).tolist() == [0, 1]

    def test_single_class_constant(self):
        X = np.random.default_rng(0).normal(size=(5, 3))
        m = base_fit(LogisticSpec(), X, [3] * 5)
        assert base_predict(m, np.ones((4, 3))).tolist() == [3] * 4
        np.testing.assert_array_equal(base_predict_proba(m, X), np.ones((5, 1)))

    def test_arbitrary_class_ids(self):
        m = base_fit(LogisticSpec(300, 0.5, 0.0), [[-2.0], [0.0], [2.0]], [7, 7, 42])
        assert m.n_classes == 2
        assert m.classes.tolist() == [7, 42]
        assert set(base_predict(m, [[-5.0], [5.0]]).tolist()) <= {7, 42}

    def test_symmetric_proba(self):
        m = base_fit(LogisticSpec(200, 0.5, 0.0), SYMMETRIC_X, [0, 1])
        # independent trace: the two one-vs-rest units mirror each other from zero init
        w, bias = 0.0, 0.0
        for _ in range(200):
            g = sum((1 / (1 + np.exp(-(w * x + bias))) - t) * x for x, t in ((-1, 1), (1, 0))) / 2
            gb = sum((1 / (1 + np.exp(-(w * x + bias))) - t) for x, t in ((-1, 1), (1, 0))) / 2
            w, bias = w - 0.5 * g, bias - 0.5 * gb
        assert m.weights[0, 0] == pytest.approx(w, rel=1e-12)
        assert m.weights[0, 1] == pytest.approx(-w, rel=1e-12)
        np.testing.assert_allclose(m.bias, 0.0, atol=1e-15)
        np.testing.assert_allclose(base_predict_proba(m, [[0.0]]), [[0.5, 0.5]], atol=1e-15)

    def test_empty_training_set(self):
        with pytest.raises(ValueError):
            base_fit(LogisticSpec(), np.zeros((0, 2)), [])

    def test_non_finite_feature(self):
        with pytest.raises(ValueError):
            base_fit(LogisticSpec(), [[np.inf]], [0])

    def test_dimension_mismatch(self):
        m = base_fit(LogisticSpec(), SYMMETRIC_X, [0, 1])
        with pytest.raises(ValueError):
            base_predict(m, [[1.0, 2.0]])

    @pytest.mark.parametrize("kwargs", [dict(iterations=0), dict(learning_rate=0), dict(l2=-1)])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            LogisticSpec(**kwargs)

    def test_sparse_and_dense_agree(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(20, 4)) * (rng.random((20, 4)) < 0.5)
        y = rng.integers(0, 3, 20)
        a = base_fit(LogisticSpec(50), FeatureMatrix.dense(X), y)
        b = base_fit(LogisticSpec(50), FeatureMatrix.from_scipy(X), y)
        np.testing.assert_allclose(a.weights, b.weights, rtol=1e-10, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    X = FeatureMatrix.dense(rng.uniform(-1, 1, (5, 3)))
    T = np.eye(2)[rng.integers(0, 2, 5)]
    W = np.zeros((3, 2))
    b = np.zeros(2)
    l2 = float(rng.uniform(0, 0.5))
    _, gW, gb = logistic_loss_grad(W, b, X, T, l2)
    h = 1e-6
    for idx in np.ndindex(W.shape):
        E = np.zeros_like(W)
        E[idx] = h
        fd = (logistic_loss_grad(W + E, b, X, T, l2)[0] - logistic_loss_grad(W - E, b, X, T, l2)[0]) / (2 * h)
        assert abs(fd - gW[idx]) <= 1e-6 * max(1.0, abs(gW[idx]))
    for c in range(2):
        e = np.zeros(2)
        e[c] = h
        fd = (logistic_loss_grad(W, b + e, X, T, l2)[0] - logistic_loss_grad(W, b - e, X, T, l2)[0]) / (2 * h)
        assert abs(fd - gb[c]) <= 1e-6 * max(1.0, abs(gb[c]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 0.1))
def test_loss_non_increasing(seed, lr):
    rng = np.random.default_rng(seed)
    X = FeatureMatrix.dense(rng.uniform(-1, 1, (8, 3)))
    T = np.eye(3)[rng.integers(0, 3, 8)]
    W, b = np.zeros((3, 3)), np.zeros(3)
    prev = np.inf
    for _ in range(50):
        loss, gW, gb = logistic_loss_grad(W, b, X, T, 1e-3)
        assert loss <= prev + 1e-15
        prev = loss
        W, b = W - lr * gW, b - lr * gb


class TestKnn:
    def test_one_nn_memorises(self):
        X = [[0.0], [1.0], [2.0]]
        m = base_fit(KnnSpec(1), X, [0, 0, 1])
        assert base_predict(m, X).tolist() == [0, 0, 1]

    def test_majority(self):
        # three nearest neighbours of 0 carry classes 1, 1, 2
        m = base_fit(KnnSpec(3), [[0.1], [0.2], [0.3], [5.0]], [1, 2, 1, 0])
        assert base_predict(m, [[0.0]]).tolist() == [1]

    def test_vote_tie_goes_to_lowest_class(self):
        m = base_fit(KnnSpec(2), [[-1.0], [1.0], [9.0]], [1, 0, 1])
        assert base_predict(m, [[0.0]]).tolist() == [0]

    def test_distance_tie_goes_to_lowest_row(self):
        # rows 0 and 1 are equidistant from 0; with k=1 row 0 wins
        m = base_fit(KnnSpec(1), [[1.0], [-1.0]], [5, 6])
        assert base_predict(m, [[0.0]]).tolist() == [5]

    def test_proba_fractions(self):
        m = base_fit(KnnSpec(4), [[0.0], [0.1], [0.2], [0.3], [9.0]], [0, 1, 0, 1, 1])
        np.testing.assert_array_equal(base_predict_proba(m, [[0.0]]), [[0.5, 0.5]])

    def test_proba_one_hot(self):
        m = base_fit(KnnSpec(1), [[0.0], [1.0]], [0, 1])
        np.testing.assert_array_equal(base_predict_proba(m, [[0.9]]), [[0.0, 1.0]])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_k_equal_n_predicts_majority(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 12))
        y = rng.integers(0, 3, n)
        m = base_fit(KnnSpec(n), rng.normal(size=(n, 2)), y)
        majority = np.bincount(y).argmax()
        assert (base_predict(m, rng.normal(size=(6, 2))) == majority).all()

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            KnnSpec(0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["logistic", "knn"]))
def test_argmax_proba_is_predict(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 15))
    X = rng.normal(size=(n, 3))
    y = rng.integers(0, 4, n)
    spec = LogisticSpec(30, 0.3) if kind == "logistic" else KnnSpec(int(rng.integers(1, n + 1)))
    m = base_fit(spec, X, y)
    Q = rng.normal(size=(10, 3))
    P = base_predict_proba(m, Q)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, rtol=1e-12)
    np.testing.assert_array_equal(m.classes[P.argmax(axis=1)], base_predict(m, Q))

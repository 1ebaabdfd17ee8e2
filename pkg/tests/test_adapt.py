import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelspace.adapt import mlknn_fit, mlknn_predict
from labelspace.sparse import csr_from_coords, row_support

from oracles import dense_rows, mlknn_bruteforce

SIX_X = [[0.0], [0.4], [1.0], [5.0], [5.3], [6.1]]
SIX_Y = csr_from_coords([(0, 0), (1, 0), (2, 0), (2, 1), (3, 1), (4, 1), (5, 1)], 6, 2)


def assert_matches_oracle(X, Y, k, s, queries):
    m = mlknn_fit(X, Y, k, s)
    prior, c, cn, cond, cond_neg, predict = mlknn_bruteforce(
        [list(map(float, r)) for r in X], dense_rows(Y), k, s)
    assert m.prior.tolist() == prior
    assert m.cond.tolist() == cond
    assert m.cond_neg.tolist() == cond_neg
    labels, scores = mlknn_predict(m, queries)
    for i, q in enumerate(queries):
        exp_labels, exp_scores = predict(list(map(float, q)))
        assert scores[i].tolist() == exp_scores
        assert [int(j in row_support(labels, i)) for j in range(Y.n_cols)] == exp_labels
    np.testing.assert_allclose(m.cond.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    np.testing.assert_allclose(m.cond_neg.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    return m


class TestFit:
    def test_prior_half(self):
        Y = csr_from_coords([(0, 0), (1, 0)], 4, 1)
        m = mlknn_fit([[0.0], [1.0], [2.0], [3.0]], Y, k=1, s=1.0)
        assert m.prior.tolist() == [0.5]

    def test_absent_label_uniform(self):
        m = mlknn_fit([[0.0], [1.0], [2.0], [3.0]], csr_from_coords([], 4, 1), k=2, s=1.0)
        assert m.prior[0] == pytest.approx(1 / 6, abs=1e-16)
        np.testing.assert_allclose(m.cond[0], [1 / 3] * 3, atol=1e-16)

    def test_six_point_tables(self):
        m = assert_matches_oracle(SIX_X, SIX_Y, 2, 1.0, SIX_X)
        # neighbour sets by hand: {1,2} {0,2} {1,0} {4,5} {3,5} {4,3}
        raw_pos = [[0, 0, 3], [1, 0, 3]]
        raw_neg = [[3, 0, 0], [0, 2, 0]]
        expected = [[(1 + c) / (3 + sum(row)) for c in row] for row in raw_pos]
        expected_neg = [[(1 + c) / (3 + sum(row)) for c in row] for row in raw_neg]
        assert m.cond.tolist() == expected
        assert m.cond_neg.tolist() == expected_neg

    @pytest.mark.parametrize("k,s", [(6, 1.0), (0, 1.0), (2, 0.0)])
    def test_argument_errors(self, k, s):
        with pytest.raises(ValueError):
            mlknn_fit(SIX_X, SIX_Y, k, s)


class TestPredict:
    def test_hand_computed_query(self):
        m = mlknn_fit(SIX_X, SIX_Y, 2, 1.0)
        labels, scores = mlknn_predict(m, [[0.2]])
        # neighbours are rows 0 and 1: label 0 count 2, label 1 count 0
        assert scores[0, 0] == pytest.approx((1 / 2 * 4 / 6) / (1 / 2 * 4 / 6 + 1 / 2 * 1 / 6), rel=1e-15)
        p, q = 5 / 8 * 2 / 7, 3 / 8 * 1 / 5
        assert scores[0, 1] == pytest.approx(p / (p + q), rel=1e-15)
        # label 1 is frequent enough that a zero count still favours it
        assert row_support(labels, 0) == [0, 1]

    def test_absent_label_never_predicted(self):
        X = [[0.0], [1.0], [2.0], [3.0], [4.0]]
        m = mlknn_fit(X, csr_from_coords([(0, 0)], 5, 2), k=2, s=1.0)
        labels, scores = mlknn_predict(m, np.linspace(-2, 6, 9).reshape(-1, 1))
        np.testing.assert_allclose(m.cond[1], [1 / 3] * 3, atol=1e-16)
        assert (scores[:, 1] < 0.5).all()
        assert labels.column(1).sum() == 0

    def test_scores_open_interval(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(30, 2))
        Y = csr_from_coords([(i, j) for i in range(30) for j in range(3) if rng.random() < 0.3], 30, 3)
        _, scores = mlknn_predict(mlknn_fit(X, Y, 5, 0.5), rng.normal(size=(20, 2)))
        assert ((scores > 0) & (scores < 1)).all()

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mlknn_predict(mlknn_fit(SIX_X, SIX_Y, 2, 1.0), [[0.0, 1.0]])


def test_enumerated_grid_matches_oracle():
    """Every label matrix on a fixed small point set, n <= 5 rows, L <= 2."""
    points = [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0], [1.0, 1.0]]
    queries = [[0.5, 0.5], [2.0, 2.0], [0.0, 0.0]]
    for n in (3, 4, 5):
        for L in (1, 2):
            for mask in range(2 ** (n * L)):
                coords = [(i, j) for i in range(n) for j in range(L) if (mask >> (i * L + j)) & 1]
                Y = csr_from_coords(coords, n, L)
                for k in range(1, n):
                    assert_matches_oracle(points[:n], Y, k, 1.0, queries)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_instances_match_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    d = int(rng.integers(1, 3))
    L = int(rng.integers(1, 4))
    # integer grid coordinates force exact distance ties
    X = rng.integers(0, 3, size=(n, d)).astype(float) if rng.random() < 0.5 else rng.normal(size=(n, d))
    Y = csr_from_coords([(i, j) for i in range(n) for j in range(L) if rng.random() < 0.5], n, L)
    k = int(rng.integers(1, n))
    s = float(rng.choice([0.5, 1.0, 2.0]))
    assert_matches_oracle(X.tolist(), Y, k, s, rng.normal(size=(4, d)).tolist())


def test_training_row_permutation_leaves_tables_unchanged():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(25, 3))
    Y = csr_from_coords([(i, j) for i in range(25) for j in range(3) if rng.random() < 0.4], 25, 3)
    perm = rng.permutation(25)
    a = mlknn_fit(X, Y, 4)
    b = mlknn_fit(X[perm], Y.select_rows(perm), 4)
    np.testing.assert_array_equal(a.prior, b.prior)
    np.testing.assert_allclose(a.cond, b.cond, rtol=1e-15)
    np.testing.assert_allclose(a.cond_neg, b.cond_neg, rtol=1e-15)


def test_labels_are_scores_above_half():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 2))
    Y = csr_from_coords([(i, j) for i in range(40) for j in range(4) if X[i, j % 2] > 0], 40, 4)
    labels, scores = mlknn_predict(mlknn_fit(X, Y, 5), rng.normal(size=(30, 2)))
    assert labels == csr_from_coords(list(zip(*np.nonzero(scores > 0.5))), 30, 4)

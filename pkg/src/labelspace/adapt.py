"""Method adaptation: multi-label k nearest neighbours (ML-kNN).

For every label the model keeps a smoothed prior and two likelihood tables
over the number of neighbours carrying that label, one conditioned on the
label being present and one on it being absent. Prediction is the MAP
decision between the two hypotheses.
"""
from __future__ import annotations

import numpy as np

from .base import nearest_neighbors
from .sparse import CsrBinaryMatrix, as_features, csr_from_arrays

__all__ = ["MlKnnModel", "mlknn_fit", "mlknn_predict", "neighbor_label_counts"]


def neighbor_label_counts(Y: CsrBinaryMatrix, neighbors):
    """``counts[i, j]`` = how many of row ``i``'s neighbours carry label ``j``.

    Returns a dense ``(n_query, L)`` int array; entries lie in ``0..k``.
    """
    n_query, k = neighbors.shape
    counts = np.zeros((n_query, Y.n_cols), dtype=np.int64)
    for slot in range(k):
        nb = neighbors[:, slot]
        sub = Y.select_rows(nb)
        counts[sub.row_ids(), sub.col_indices] += 1
    return counts


class MlKnnModel:
    """Fitted ML-kNN tables.

    Attributes
    ----------
    prior : ndarray, shape (L,)
        Smoothed probability that each label is present.
    cond : ndarray, shape (L, k + 1)
        ``cond[j, c]``: probability that ``c`` of the ``k`` neighbours carry
        label ``j`` given that the row carries ``j``.
    cond_neg : ndarray, shape (L, k + 1)
        Same, given that the row does not carry ``j``.
    """

    __slots__ = ("k", "s", "train", "labels", "prior", "cond", "cond_neg")

    def __init__(self, k, s, train, labels, prior, cond, cond_neg):
        self.k = k
        self.s = s
        self.train = train
        self.labels = labels
        for a in (prior, cond, cond_neg):
            a.setflags(write=False)
        self.prior = prior
        self.cond = cond
        self.cond_neg = cond_neg

    @property
    def n_labels(self):
        return self.labels.n_cols

    def predict(self, X):
        return mlknn_predict(self, X)[0]


def mlknn_fit(X, Y: CsrBinaryMatrix, k: int = 10, s: float = 1.0) -> MlKnnModel:
    X = as_features(X)
    n, L = Y.shape
    if X.n_rows != n:
        raise ValueError(f"features have {X.n_rows} rows but labels have {n}")
    if k < 1 or k >= n:
        raise ValueError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    if not s > 0:
        raise ValueError("smoothing s must be > 0")

    prior = (s + Y.column_sums()) / (2 * s + n)

    neighbors = nearest_neighbors(X, X, k, exclude_self=True)
    counts = neighbor_label_counts(Y, neighbors)
    has = np.zeros((n, L), dtype=bool)
    has[Y.row_ids(), Y.col_indices] = True

    c_pos = np.zeros((L, k + 1), dtype=np.int64)
    c_neg = np.zeros((L, k + 1), dtype=np.int64)
    label_idx = np.broadcast_to(np.arange(L), (n, L))
    np.add.at(c_pos, (label_idx[has], counts[has]), 1)
    np.add.at(c_neg, (label_idx[~has], counts[~has]), 1)

    cond = (s + c_pos) / (s * (k + 1) + c_pos.sum(axis=1, keepdims=True))
    cond_neg = (s + c_neg) / (s * (k + 1) + c_neg.sum(axis=1, keepdims=True))
    return MlKnnModel(k, s, X, Y, prior, cond, cond_neg)


def mlknn_predict(m: MlKnnModel, X):
    """Labels and posterior scores for the rows of ``X``.

    Label ``j`` is set iff its posterior is strictly above 0.5.
    """
    X = as_features(X)
    if X.n_cols != m.train.n_cols:
        raise ValueError(f"model expects {m.train.n_cols} features, got {X.n_cols}")
    neighbors = nearest_neighbors(m.train, X, m.k)
    counts = neighbor_label_counts(m.labels, neighbors)
    L = m.n_labels
    j = np.arange(L)
    pos = m.prior * m.cond[j, counts]
    neg = (1 - m.prior) * m.cond_neg[j, counts]
    scores = pos / (pos + neg)
    rows, cols = np.nonzero(scores > 0.5)
    return csr_from_arrays(rows, cols, X.n_rows, L), scores

"""Single-label base classifiers used by the problem transformation methods.

A *spec* is a small frozen config object with a ``fit(X, y)`` method that
returns a trained model; a trained model offers ``predict`` and
``predict_proba``. Anything following that protocol can be passed wherever a
spec is expected, which is how tests inject stub learners.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .sparse import FeatureMatrix, as_features

__all__ = [
    "LogisticSpec",
    "KnnSpec",
    "LogisticModel",
    "KnnModel",
    "base_fit",
    "base_predict",
    "base_predict_proba",
    "logistic_loss_grad",
    "nearest_neighbors",
]

# Upper bound on elements of one (queries x train x features) distance block.
_BLOCK_ELEMENTS = 1 << 22


def _encode_classes(y):
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("class ids must be a 1-d sequence")
    classes, ids = np.unique(y, return_inverse=True)
    return classes, ids.astype(np.int64)


def _check_training(X, y):
    X = as_features(X)
    y = np.asarray(y)
    if X.n_rows == 0 or y.size == 0:
        raise ValueError("training set is empty")
    if y.shape != (X.n_rows,):
        raise ValueError(f"got {y.size} class ids for {X.n_rows} rows")
    return X, y


class _TrainedModel:
    """Shared dimension check and class decoding."""

    classes: np.ndarray
    n_features: int

    @property
    def n_classes(self):
        return len(self.classes)

    def _check(self, X):
        X = as_features(X)
        if X.n_cols != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {X.n_cols}")
        return X

    def predict(self, X):
        proba = self.predict_proba(X)
        # argmax picks the first maximum, i.e. the lowest class id
        return self.classes[np.argmax(proba, axis=1)]


# Logistic regression ------------------------------------------------------

def _gradient(W, b, X, T, l2):
    R = (expit(X.dot(W) + b) - T) / X.n_rows
    return X.tdot(R) + l2 * W, R.sum(axis=0)


def logistic_loss_grad(W, b, X: FeatureMatrix, T, l2):
    """Summed one-vs-rest objective and its gradient.

    For each class column ``c`` the objective is the mean binary log-loss of
    targets ``T[:, c]`` plus ``l2 / 2 * ||W[:, c]||^2``; the bias is not
    penalised. Returns ``(loss, grad_W, grad_b)``.
    """
    n = X.n_rows
    Z = X.dot(W) + b
    # log(1 + exp(z)) - t*z, stable for large |z|
    loss = np.sum(np.logaddexp(0.0, Z) - T * Z) / n + 0.5 * l2 * np.sum(W * W)
    return (loss, *_gradient(W, b, X, T, l2))


@dataclass(frozen=True)
class LogisticSpec:
    """One-vs-rest logistic regression trained by full-batch gradient descent."""

    iterations: int = 200
    learning_rate: float = 0.1
    l2: float = 1e-4

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")

    def fit(self, X, y):
        X, y = _check_training(X, y)
        classes, ids = _encode_classes(y)
        C, d = len(classes), X.n_cols
        W = np.zeros((d, C))
        b = np.zeros(C)
        if C > 1:
            T = np.zeros((X.n_rows, C))
            T[np.arange(X.n_rows), ids] = 1.0
            for _ in range(self.iterations):
                gW, gb = _gradient(W, b, X, T, self.l2)
                W -= self.learning_rate * gW
                b -= self.learning_rate * gb
        W.setflags(write=False)
        b.setflags(write=False)
        return LogisticModel(classes, W, b)


class LogisticModel(_TrainedModel):
    __slots__ = ("classes", "weights", "bias")

    def __init__(self, classes, weights, bias):
        self.classes = classes
        self.weights = weights
        self.bias = bias

    @property
    def n_features(self):
        return self.weights.shape[0]

    def decision_function(self, X):
        X = self._check(X)
        return X.dot(self.weights) + self.bias

    def predict_proba(self, X):
        X = self._check(X)
        if self.n_classes == 1:
            return np.ones((X.n_rows, 1))
        S = expit(X.dot(self.weights) + self.bias)
        total = S.sum(axis=1, keepdims=True)
        zero = total[:, 0] == 0
        total[zero] = 1.0
        P = S / total
        P[zero] = 1.0 / self.n_classes
        return P


# k nearest neighbours -----------------------------------------------------

def nearest_neighbors(train: FeatureMatrix, query: FeatureMatrix, k: int, exclude_self=False):
    """Indices of the ``k`` nearest training rows for every query row.

    Euclidean distance; among equal distances the lower training index wins.
    With ``exclude_self`` the query set must be the training set and row ``i``
    is never its own neighbour. Returns an ``(n_query, k)`` int array ordered
    nearest first.
    """
    n_train = train.n_rows
    limit = n_train - 1 if exclude_self else n_train
    if not 1 <= k <= limit:
        raise ValueError(f"k={k} needs between 1 and {limit} candidate neighbours")
    T = train.to_dense()
    out = np.empty((query.n_rows, k), dtype=np.int64)
    step = max(1, _BLOCK_ELEMENTS // max(1, n_train * max(1, T.shape[1])))
    for start in range(0, query.n_rows, step):
        stop = min(query.n_rows, start + step)
        Q = query.to_dense(np.arange(start, stop))
        D = ((Q[:, None, :] - T[None, :, :]) ** 2).sum(axis=2)
        if exclude_self:
            D[np.arange(stop - start), np.arange(start, stop)] = np.inf
        out[start:stop] = np.argsort(D, axis=1, kind="stable")[:, :k]
    return out


@dataclass(frozen=True)
class KnnSpec:
    """Majority-vote k nearest neighbour classifier."""

    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def fit(self, X, y):
        X, y = _check_training(X, y)
        classes, ids = _encode_classes(y)
        ids.setflags(write=False)
        return KnnModel(classes, X, ids, self.k)


class KnnModel(_TrainedModel):
    __slots__ = ("classes", "train", "class_ids", "k")

    def __init__(self, classes, train, class_ids, k):
        self.classes = classes
        self.train = train
        self.class_ids = class_ids
        self.k = k

    @property
    def n_features(self):
        return self.train.n_cols

    def predict_proba(self, X):
        X = self._check(X)
        # fewer stored rows than k: every stored row votes
        k = min(self.k, self.train.n_rows)
        nbrs = nearest_neighbors(self.train, X, k)
        votes = self.class_ids[nbrs]
        P = np.zeros((X.n_rows, self.n_classes))
        for c in range(self.n_classes):
            P[:, c] = np.count_nonzero(votes == c, axis=1)
        return P / k


# Functional entry points -------------------------------------------------

def base_fit(spec, X, y):
    """Train ``spec`` on ``(X, y)``; ``y`` holds one class id per row."""
    return spec.fit(X, y)


def base_predict(model, X):
    return model.predict(X)


def base_predict_proba(model, X):
    return model.predict_proba(X)

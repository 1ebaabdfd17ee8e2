"""Problem transformation: Binary Relevance, Classifier Chains, Label Powerset."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Tuple

import numpy as np

from .base import LogisticSpec
from .sparse import CsrBinaryMatrix, as_features, csr_from_arrays

__all__ = [
    "BinaryRelevanceModel",
    "ClassifierChainModel",
    "LabelPowersetModel",
    "br_fit",
    "br_predict",
    "cc_fit",
    "cc_predict",
    "lp_fit",
    "lp_predict",
    "random_order",
]


class LabelFitError(ValueError):
    """A per-label (or per-subset) fit failed; ``index`` says which one."""

    def __init__(self, index, cause):
        self.index = index
        super().__init__(f"fit failed for label {index}: {cause}")


def _check_xy(X, Y):
    X = as_features(X)
    if not isinstance(Y, CsrBinaryMatrix):
        raise TypeError("labels must be a CsrBinaryMatrix")
    if X.n_rows != Y.n_rows or X.n_rows < 1:
        raise ValueError(f"need matching non-empty inputs, got {X.n_rows} and {Y.n_rows} rows")
    return X, Y


def _column_rows(Y: CsrBinaryMatrix):
    """Rows holding each label, grouped from the stored entries (O(nnz) total)."""
    order = np.argsort(Y.col_indices, kind="stable")
    rows = Y.row_ids()[order]
    bounds = np.searchsorted(Y.col_indices[order], np.arange(Y.n_cols + 1))
    return [rows[bounds[j]:bounds[j + 1]] for j in range(Y.n_cols)]


def _target(rows, n_rows):
    t = np.zeros(n_rows, dtype=np.int64)
    t[rows] = 1
    return t


def _stack_columns(preds, n_rows):
    """Sparse matrix whose column ``j`` is the 0/1 vector ``preds[j]``."""
    rows, cols = [], []
    for j, p in enumerate(preds):
        r = np.flatnonzero(np.asarray(p) == 1)
        rows.append(r)
        cols.append(np.full(r.size, j, dtype=np.int64))
    if not rows:
        return CsrBinaryMatrix.empty(n_rows, 0)
    return csr_from_arrays(np.concatenate(rows), np.concatenate(cols), n_rows, len(rows))


def _fit_labels(spec, X, column_rows, n_jobs):
    def fit_one(j):
        try:
            return spec.fit(X, _target(column_rows[j], X.n_rows))
        except Exception as exc:
            raise LabelFitError(j, exc) from exc

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fit_one, range(len(column_rows))))
    return [fit_one(j) for j in range(len(column_rows))]


# Binary Relevance -------------------------------------------------------------

class BinaryRelevanceModel:
    """One independent binary model per label."""

    __slots__ = ("models", "n_labels")

    def __init__(self, models):
        self.models = tuple(models)
        self.n_labels = len(self.models)

    def predict(self, X):
        return br_predict(self, X)


def br_fit(X, Y, spec=None, n_jobs=None) -> BinaryRelevanceModel:
    """Train ``spec`` separately on every label column of ``Y``."""
    X, Y = _check_xy(X, Y)
    spec = spec or LogisticSpec()
    return BinaryRelevanceModel(_fit_labels(spec, X, _column_rows(Y), n_jobs))


def br_predict(m: BinaryRelevanceModel, X) -> CsrBinaryMatrix:
    X = as_features(X)
    return _stack_columns((sub.predict(X) for sub in m.models), X.n_rows)


# Classifier Chains ------------------------------------------------------------

def random_order(n_labels, seed):
    return [int(j) for j in np.random.default_rng(seed).permutation(n_labels)]


def _resolve_order(order, n_labels, seed):
    if order is None or (isinstance(order, str) and order == "identity"):
        return list(range(n_labels))
    if isinstance(order, str):
        if order != "random":
            raise ValueError(f"unknown chain order {order!r}")
        if seed is None:
            raise ValueError("random chain order needs a seed")
        return random_order(n_labels, seed)
    order = [int(j) for j in order]
    if sorted(order) != list(range(n_labels)):
        raise ValueError(f"chain order {order} is not a permutation of 0..{n_labels - 1}")
    return order


class ClassifierChainModel:
    """Chain of binary models; position ``p`` also sees the ``p`` earlier labels."""

    __slots__ = ("order", "models", "n_features")

    def __init__(self, order, models, n_features):
        self.order = tuple(order)
        self.models = tuple(models)
        self.n_features = n_features

    @property
    def n_labels(self):
        return len(self.order)

    def predict(self, X):
        return cc_predict(self, X)


def cc_fit(X, Y, spec=None, order="identity", seed=None) -> ClassifierChainModel:
    """Fit a classifier chain.

    ``order`` is ``"identity"``, ``"random"`` (needs ``seed``) or an explicit
    permutation of label indices. Training augments the features with the
    true values of the preceding labels.
    """
    X, Y = _check_xy(X, Y)
    spec = spec or LogisticSpec()
    order = _resolve_order(order, Y.n_cols, seed)
    column_rows = _column_rows(Y)
    models = []
    for p, j in enumerate(order):
        if p:
            Xp = X.hstack(np.column_stack([_target(column_rows[q], X.n_rows) for q in order[:p]]))
        else:
            Xp = X
        try:
            models.append(spec.fit(Xp, _target(column_rows[j], X.n_rows)))
        except Exception as exc:
            raise LabelFitError(j, exc) from exc
    return ClassifierChainModel(order, models, X.n_cols)


def cc_predict(m: ClassifierChainModel, X) -> CsrBinaryMatrix:
    X = as_features(X)
    if X.n_cols != m.n_features:
        raise ValueError(f"model expects {m.n_features} features, got {X.n_cols}")
    predicted = []
    for p, sub in enumerate(m.models):
        Xp = X.hstack(np.column_stack(predicted)) if p else X
        predicted.append(np.asarray(sub.predict(Xp), dtype=np.int64))
    by_label = [None] * m.n_labels
    for p, j in enumerate(m.order):
        by_label[j] = predicted[p]
    return _stack_columns(by_label, X.n_rows)


# Label Powerset ---------------------------------------------------------------

class LabelPowersetModel:
    """Multiclass model over the label combinations seen in training.

    ``combinations[c]`` is the sorted label tuple for class id ``c``.
    Predictions can only ever be one of these combinations.
    """

    __slots__ = ("combinations", "class_of", "model", "n_labels")

    def __init__(self, combinations, model, n_labels):
        self.combinations: Tuple[Tuple[int, ...], ...] = tuple(combinations)
        self.class_of: Dict[Tuple[int, ...], int] = {c: i for i, c in enumerate(self.combinations)}
        self.model = model
        self.n_labels = n_labels

    def encode(self, Y: CsrBinaryMatrix):
        return np.array([self.class_of[tuple(Y.row(i).tolist())] for i in range(Y.n_rows)],
                        dtype=np.int64)

    def decode(self, class_ids) -> CsrBinaryMatrix:
        rows, cols = [], []
        for i, c in enumerate(class_ids):
            combo = self.combinations[int(c)]
            rows.extend([i] * len(combo))
            cols.extend(combo)
        return csr_from_arrays(rows, cols, len(class_ids), self.n_labels)

    def predict(self, X):
        return lp_predict(self, X)


def _enumerate_combinations(Y: CsrBinaryMatrix):
    table: Dict[Tuple[int, ...], int] = {}
    ids = np.empty(Y.n_rows, dtype=np.int64)
    for i in range(Y.n_rows):
        key = tuple(Y.row(i).tolist())
        ids[i] = table.setdefault(key, len(table))
    return list(table), ids


def lp_fit(X, Y, spec=None) -> LabelPowersetModel:
    """Train one multiclass model on label-combination class ids.

    Class ids follow first occurrence in ``Y``.
    """
    X, Y = _check_xy(X, Y)
    spec = spec or LogisticSpec()
    combos, ids = _enumerate_combinations(Y)
    return LabelPowersetModel(combos, spec.fit(X, ids), Y.n_cols)


def lp_predict(m: LabelPowersetModel, X) -> CsrBinaryMatrix:
    return m.decode(m.model.predict(as_features(X)))

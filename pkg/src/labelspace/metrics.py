"""Multi-label evaluation measures computed on sparse supports.

Conventions for empty denominators: the Jaccard index of two empty rows is 1,
a label with no true and no predicted positives contributes F1 = 1 to the
macro average, and every other 0/0 ratio is 0.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .sparse import CsrBinaryMatrix

__all__ = ["MetricReport", "evaluate", "confusion_counts", "METRIC_NAMES"]


@dataclass(frozen=True)
class MetricReport:
    hamming_loss: float
    subset_accuracy: float
    jaccard_score: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def as_dict(self):
        return asdict(self)


METRIC_NAMES = tuple(MetricReport.__dataclass_fields__)


def _ratio(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def _check(Y_true, Y_pred):
    if Y_true.shape != Y_pred.shape:
        raise ValueError(f"shape mismatch: {Y_true.shape} vs {Y_pred.shape}")


def _overlap(Y_true: CsrBinaryMatrix, Y_pred: CsrBinaryMatrix):
    """Row and column of every cell set in both matrices."""
    both = np.intersect1d(Y_true.keys(), Y_pred.keys(), assume_unique=True)
    L = Y_true.n_cols
    return both // L, both % L


def confusion_counts(Y_true: CsrBinaryMatrix, Y_pred: CsrBinaryMatrix):
    """Per-label ``(TP, FP, FN, TN)`` counts as an ``(L, 4)`` int array."""
    _check(Y_true, Y_pred)
    n, L = Y_true.shape
    _, tp_cols = _overlap(Y_true, Y_pred)
    tp = np.bincount(tp_cols, minlength=L)
    fp = Y_pred.column_sums() - tp
    fn = Y_true.column_sums() - tp
    tn = n - tp - fp - fn
    return np.column_stack([tp, fp, fn, tn]).astype(np.int64)


def evaluate(Y_true: CsrBinaryMatrix, Y_pred: CsrBinaryMatrix) -> MetricReport:
    _check(Y_true, Y_pred)
    n, L = Y_true.shape
    if n < 1 or L < 1:
        raise ValueError("evaluation needs at least one row and one label")
    tp_rows, tp_cols = _overlap(Y_true, Y_pred)

    inter = np.bincount(tp_rows, minlength=n)
    t_len = Y_true.row_lengths()
    p_len = Y_pred.row_lengths()
    union = t_len + p_len - inter
    exact = (inter == t_len) & (inter == p_len)
    jaccard = np.where(union == 0, 1.0, _ratio(inter, union))

    tp = np.bincount(tp_cols, minlength=L)
    t_col = Y_true.column_sums()
    p_col = Y_pred.column_sums()
    fp = p_col - tp
    fn = t_col - tp
    TP, FP, FN = int(tp.sum()), int(fp.sum()), int(fn.sum())

    vacuous = (t_col == 0) & (p_col == 0)
    macro_f1 = np.where(vacuous, 1.0, _ratio(2 * tp, 2 * tp + fp + fn))

    return MetricReport(
        hamming_loss=(FP + FN) / (n * L),
        subset_accuracy=float(np.mean(exact)),
        jaccard_score=float(np.mean(jaccard)),
        micro_precision=float(_ratio(TP, TP + FP)),
        micro_recall=float(_ratio(TP, TP + FN)),
        micro_f1=float(_ratio(2 * TP, 2 * TP + FP + FN)),
        macro_precision=float(np.mean(_ratio(tp, p_col))),
        macro_recall=float(np.mean(_ratio(tp, t_col))),
        macro_f1=float(np.mean(macro_f1)),
    )

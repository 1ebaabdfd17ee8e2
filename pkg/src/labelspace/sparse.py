"""Sparse matrix containers used throughout the package.

Two containers live here:

``CsrBinaryMatrix``
    Compressed sparse row storage of a 0/1 matrix. Only the positions of set
    bits are stored, there is no value array. Label spaces are always held in
    this form.

``FeatureMatrix``
    Real-valued observations, stored either densely (row-major ``ndarray``)
    or as CSR with explicit values. Both variants answer the same queries.

All arrays are made read-only on construction, so instances can be shared
freely between threads.
"""
from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CsrBinaryMatrix",
    "FeatureMatrix",
    "csr_from_coords",
    "csr_from_arrays",
    "select_columns",
    "select_rows",
    "density",
    "row_support",
    "as_features",
    "forbid_densify",
]

_INDEX = np.int64

# Called with (kind, shape) whenever a sparse container is expanded into a
# dense array. Tests swap it out to prove code paths stay sparse.
_densify_hook: Optional[Callable[[str, tuple], None]] = None


def _notify_densify(kind: str, shape: tuple) -> None:
    if _densify_hook is not None:
        _densify_hook(kind, shape)


@contextmanager
def forbid_densify(kinds=("labels",)):
    """Raise ``AssertionError`` if a matching container is densified inside the block.

    ``kinds`` selects which containers are guarded: ``"labels"`` for
    :class:`CsrBinaryMatrix`, ``"features"`` for CSR-backed feature matrices.
    """
    global _densify_hook
    previous = _densify_hook

    def hook(kind, shape):
        if kind in kinds:
            raise AssertionError(f"dense {kind} allocation of shape {shape}")
        if previous is not None:
            previous(kind, shape)

    _densify_hook = hook
    try:
        yield
    finally:
        _densify_hook = previous


def _frozen(a, dtype=_INDEX):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _gather_rows(offsets, rows):
    """Positions into the index array covering ``rows`` (in order) and new offsets."""
    starts = offsets[rows]
    lengths = offsets[rows + 1] - starts
    new_offsets = np.zeros(len(rows) + 1, dtype=_INDEX)
    np.cumsum(lengths, out=new_offsets[1:])
    total = int(new_offsets[-1])
    # position k of output segment r maps to starts[r] + k
    pos = np.arange(total, dtype=_INDEX) - np.repeat(new_offsets[:-1] - starts, lengths)
    return pos, new_offsets


def _check_rows(rows, n_rows):
    rows = np.asarray(rows, dtype=_INDEX).reshape(-1)
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
        bad = rows[(rows < 0) | (rows >= n_rows)][0]
        raise IndexError(f"row index {int(bad)} out of bounds for {n_rows} rows")
    return rows


class CsrBinaryMatrix:
    """Binary matrix in compressed sparse row form.

    Parameters
    ----------
    n_rows, n_cols : int
        Shape of the matrix.
    row_offsets : array of int, length ``n_rows + 1``
        Row ``i`` owns ``col_indices[row_offsets[i]:row_offsets[i + 1]]``.
    col_indices : array of int
        Column positions of set bits, strictly increasing within each row.
    check : bool
        Validate the structural invariants. Internal callers that build
        already-canonical arrays pass ``False``.
    """

    __slots__ = ("n_rows", "n_cols", "row_offsets", "col_indices")

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, check=True):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = _frozen(row_offsets)
        self.col_indices = _frozen(col_indices)
        if check:
            self._validate()

    def _validate(self):
        off, idx = self.row_offsets, self.col_indices
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if off.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        if off[0] != 0 or off[-1] != idx.size:
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(off) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if idx.size:
            if idx.min() < 0 or idx.max() >= self.n_cols:
                raise ValueError("column index out of range")
            step = np.diff(idx)
            # a non-increase is only allowed where a new row begins
            row_start = np.zeros(idx.size, dtype=bool)
            row_start[off[1:-1][off[1:-1] < idx.size]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise ValueError("column indices must be strictly increasing within rows")

    # construction helpers -------------------------------------------------

    @classmethod
    def empty(cls, n_rows, n_cols):
        return cls(n_rows, n_cols, np.zeros(n_rows + 1, dtype=_INDEX), [], check=False)

    @classmethod
    def from_dense(cls, array):
        a = np.asarray(array)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        rows, cols = np.nonzero(a)
        return csr_from_arrays(rows, cols, a.shape[0], a.shape[1])

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], n_cols: int):
        """Build from one iterable of set column indices per row."""
        r, c = [], []
        n = 0
        for i, support in enumerate(rows):
            n = i + 1
            for j in support:
                r.append(i)
                c.append(j)
        return csr_from_arrays(r, c, n, n_cols)

    # queries ---------------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.col_indices.size)

    def row(self, i):
        """Column indices set in row ``i`` as a read-only array view."""
        return self.col_indices[self.row_offsets[i]:self.row_offsets[i + 1]]

    def row_lengths(self):
        return np.diff(self.row_offsets)

    def row_ids(self):
        """Row number of every stored entry, aligned with ``col_indices``."""
        return np.repeat(np.arange(self.n_rows, dtype=_INDEX), self.row_lengths())

    def coords(self):
        return self.row_ids(), self.col_indices.copy()

    def column(self, j):
        """Dense 0/1 vector of column ``j`` (length ``n_rows``)."""
        if not 0 <= j < self.n_cols:
            raise IndexError(f"column index {j} out of bounds for {self.n_cols} columns")
        out = np.zeros(self.n_rows, dtype=np.int64)
        out[self.row_ids()[self.col_indices == j]] = 1
        return out

    def column_sums(self):
        return np.bincount(self.col_indices, minlength=self.n_cols).astype(np.int64)

    def to_dense(self, dtype=np.int8):
        _notify_densify("labels", self.shape)
        out = np.zeros(self.shape, dtype=dtype)
        out[self.row_ids(), self.col_indices] = 1
        return out

    def to_scipy(self):
        data = np.ones(self.nnz, dtype=np.int8)
        return sp.csr_matrix((data, self.col_indices, self.row_offsets), shape=self.shape)

    def keys(self):
        """Flat ``row * n_cols + col`` keys of stored entries, sorted ascending."""
        return self.row_ids() * self.n_cols + self.col_indices

    def __eq__(self, other):
        if not isinstance(other, CsrBinaryMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
        )

    __hash__ = None

    def __repr__(self):
        return f"CsrBinaryMatrix(shape={self.shape}, nnz={self.nnz})"

    def select_columns(self, cols):
        return select_columns(self, cols)

    def select_rows(self, rows):
        return select_rows(self, rows)


def csr_from_coords(coords, n_rows, n_cols):
    """Build a :class:`CsrBinaryMatrix` from a sequence of ``(row, col)`` pairs.

    Repeated positions collapse to one entry.

    >>> csr_from_coords([(0, 1), (0, 1), (1, 0)], 2, 2).nnz
    2
    """
    arr = np.asarray(list(coords), dtype=_INDEX).reshape(-1, 2)
    return csr_from_arrays(arr[:, 0], arr[:, 1], n_rows, n_cols)


def csr_from_arrays(rows, cols, n_rows, n_cols):
    """Same as :func:`csr_from_coords` with rows and columns given as parallel arrays."""
    rows = np.asarray(rows, dtype=_INDEX).reshape(-1)
    cols = np.asarray(cols, dtype=_INDEX).reshape(-1)
    if rows.shape != cols.shape:
        raise ValueError("rows and cols must have equal length")
    bad = (rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise IndexError(
            f"coordinate ({int(rows[k])}, {int(cols[k])}) out of bounds for shape ({n_rows}, {n_cols})"
        )
    if rows.size == 0:
        return CsrBinaryMatrix.empty(n_rows, n_cols)
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    keep = np.ones(rows.size, dtype=bool)
    keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    rows, cols = rows[keep], cols[keep]
    offsets = np.zeros(n_rows + 1, dtype=_INDEX)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=offsets[1:])
    return CsrBinaryMatrix(n_rows, n_cols, offsets, cols, check=False)


def select_columns(m: CsrBinaryMatrix, cols: Sequence[int]) -> CsrBinaryMatrix:
    """Keep columns ``cols`` of ``m`` in the given order.

    Result column ``j`` is column ``cols[j]`` of ``m``. Works on the stored
    entries only; cost is O(nnz log nnz) regardless of ``n_rows * n_cols``.
    """
    cols = np.asarray(cols, dtype=_INDEX).reshape(-1)
    if cols.size:
        if cols.min() < 0 or cols.max() >= m.n_cols:
            raise ValueError(f"column selection out of range for {m.n_cols} columns")
        if np.unique(cols).size != cols.size:
            raise ValueError("column selection contains duplicates")
    new_pos = np.full(m.n_cols, -1, dtype=_INDEX)
    new_pos[cols] = np.arange(cols.size, dtype=_INDEX)
    mapped = new_pos[m.col_indices]
    keep = mapped >= 0
    rows = m.row_ids()[keep]
    mapped = mapped[keep]
    # rows already sorted; reorder columns inside each row
    order = np.lexsort((mapped, rows))
    offsets = np.zeros(m.n_rows + 1, dtype=_INDEX)
    np.cumsum(np.bincount(rows, minlength=m.n_rows), out=offsets[1:])
    return CsrBinaryMatrix(m.n_rows, cols.size, offsets, mapped[order], check=False)


def select_rows(m, rows):
    """Rows ``rows`` of ``m`` in the given order; repeats are allowed."""
    if isinstance(m, FeatureMatrix):
        return m.select_rows(rows)
    rows = _check_rows(rows, m.n_rows)
    pos, offsets = _gather_rows(m.row_offsets, rows)
    return CsrBinaryMatrix(rows.size, m.n_cols, offsets, m.col_indices[pos], check=False)


def density(m: CsrBinaryMatrix) -> float:
    """Fraction of set cells, ``nnz / (n_rows * n_cols)``."""
    size = m.n_rows * m.n_cols
    if size == 0:
        raise ValueError("density of a zero-sized matrix is undefined")
    return m.nnz / size


def row_support(m: CsrBinaryMatrix, i: int) -> list:
    if not 0 <= i < m.n_rows:
        raise IndexError(f"row index {i} out of bounds for {m.n_rows} rows")
    return m.row(i).tolist()


class FeatureMatrix:
    """Real-valued observation matrix, dense or CSR.

    Use :meth:`dense` or :meth:`csr` to construct. Arithmetic helpers
    (:meth:`dot`, :meth:`tdot`) work on either storage without converting.
    """

    __slots__ = ("n_rows", "n_cols", "_dense", "row_offsets", "col_indices", "values")

    def __init__(self, n_rows, n_cols, dense=None, row_offsets=None, col_indices=None, values=None):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self._dense = dense
        self.row_offsets = row_offsets
        self.col_indices = col_indices
        self.values = values

    @classmethod
    def dense(cls, array):
        a = np.array(array, dtype=np.float64, copy=True)
        if a.ndim == 1:
            a = a.reshape(-1, 1) if a.size else a.reshape(0, 0)
        if a.ndim != 2:
            raise ValueError("feature array must be 2-d")
        if not np.all(np.isfinite(a)):
            raise ValueError("features must be finite")
        a.setflags(write=False)
        return cls(a.shape[0], a.shape[1], dense=a)

    @classmethod
    def csr(cls, n_rows, n_cols, row_offsets, col_indices, values):
        values = _frozen(values, np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError("features must be finite")
        structure = CsrBinaryMatrix(n_rows, n_cols, row_offsets, col_indices)
        if values.shape != structure.col_indices.shape:
            raise ValueError("values must align with col_indices")
        return cls(n_rows, n_cols, row_offsets=structure.row_offsets,
                   col_indices=structure.col_indices, values=values)

    @classmethod
    def from_scipy(cls, m):
        m = sp.csr_matrix(m, dtype=np.float64)
        m.sum_duplicates()
        m.sort_indices()
        return cls.csr(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @property
    def is_sparse(self):
        return self._dense is None

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def to_scipy(self):
        if self.is_sparse:
            return sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=self.shape)
        return sp.csr_matrix(self._dense)

    def to_dense(self, rows=None):
        """Dense ``ndarray`` copy, optionally of a row slice only."""
        if not self.is_sparse:
            block = self._dense if rows is None else self._dense[rows]
            return np.array(block)
        m = self.to_scipy()
        if rows is not None:
            m = m[rows]
        _notify_densify("features", m.shape)
        return m.toarray()

    def select_rows(self, rows):
        rows = _check_rows(rows, self.n_rows)
        if not self.is_sparse:
            return FeatureMatrix.dense(self._dense[rows])
        pos, offsets = _gather_rows(self.row_offsets, rows)
        return FeatureMatrix(rows.size, self.n_cols, row_offsets=_frozen(offsets),
                             col_indices=_frozen(self.col_indices[pos]),
                             values=_frozen(self.values[pos], np.float64))

    def hstack(self, extra):
        """Append the columns of the dense block ``extra`` (n_rows x p)."""
        extra = np.asarray(extra, dtype=np.float64).reshape(self.n_rows, -1)
        if not self.is_sparse:
            return FeatureMatrix.dense(np.hstack([self._dense, extra]))
        return FeatureMatrix.from_scipy(sp.hstack([self.to_scipy(), sp.csr_matrix(extra)], format="csr"))

    def dot(self, w):
        """``X @ w`` for a dense ``w``."""
        if self.is_sparse:
            return np.asarray(self.to_scipy() @ w)
        return self._dense @ w

    def tdot(self, g):
        """``X.T @ g`` for a dense ``g``."""
        if self.is_sparse:
            return np.asarray(self.to_scipy().T @ g)
        return self._dense.T @ g

    def equals(self, other):
        """Content equality, independent of storage variant."""
        if not isinstance(other, FeatureMatrix) or self.shape != other.shape:
            return False
        if self.is_sparse and other.is_sparse:
            return (self.to_scipy() != other.to_scipy()).nnz == 0
        return np.array_equal(self.to_dense(), other.to_dense())

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def __repr__(self):
        kind = "csr" if self.is_sparse else "dense"
        return f"FeatureMatrix(shape={self.shape}, storage={kind})"


FeatureLike = Union[FeatureMatrix, np.ndarray, Sequence[Sequence[float]]]


def as_features(X) -> FeatureMatrix:
    """Coerce arrays, nested lists and scipy matrices to :class:`FeatureMatrix`."""
    if isinstance(X, FeatureMatrix):
        return X
    if sp.issparse(X):
        return FeatureMatrix.from_scipy(X)
    a = np.asarray(X, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("feature matrix must be 2-d")
    return FeatureMatrix.dense(a)

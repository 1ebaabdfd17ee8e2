"""Datasets: ARFF reading/writing, cross-validation folds, synthetic data."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from .sparse import CsrBinaryMatrix, FeatureMatrix, as_features, csr_from_arrays

__all__ = [
    "ArffError",
    "LabelLocation",
    "LabelSpec",
    "MultiLabelDataset",
    "parse_arff",
    "load_arff",
    "write_arff",
    "kfold_indices",
    "generate_synthetic",
    "dataset_stats",
]


class ArffError(ValueError):
    """Malformed ARFF text. ``line`` is the 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ArffError):
    """Label attributes that do not describe a binary 0/1 label."""


class LabelLocation(enum.Enum):
    AT_END = "end"
    AT_START = "start"


@dataclass(frozen=True)
class LabelSpec:
    """How many attributes are labels and where they sit in the header."""

    count: int
    location: LabelLocation = LabelLocation.AT_END

    def __post_init__(self):
        if isinstance(self.location, str):
            object.__setattr__(self, "location", LabelLocation(self.location))
        if self.count < 1:
            raise ValueError(f"label count must be positive, got {self.count}")


class MultiLabelDataset:
    """Feature matrix paired with a binary label matrix and column names."""

    __slots__ = ("features", "labels", "feature_names", "label_names")

    def __init__(self, features, labels: CsrBinaryMatrix, feature_names=None, label_names=None):
        features = as_features(features)
        if features.n_rows != labels.n_rows:
            raise ValueError(
                f"features have {features.n_rows} rows but labels have {labels.n_rows}"
            )
        if feature_names is None:
            feature_names = [f"x{i}" for i in range(features.n_cols)]
        if label_names is None:
            label_names = [f"y{j}" for j in range(labels.n_cols)]
        feature_names, label_names = list(feature_names), list(label_names)
        if len(feature_names) != features.n_cols or len(label_names) != labels.n_cols:
            raise ValueError("name lists must match matrix widths")
        if len(set(feature_names) | set(label_names)) != len(feature_names) + len(label_names):
            raise ValueError("attribute names must be unique")
        self.features = features
        self.labels = labels
        self.feature_names = tuple(feature_names)
        self.label_names = tuple(label_names)

    @property
    def n_samples(self):
        return self.labels.n_rows

    def subset(self, rows):
        return MultiLabelDataset(self.features.select_rows(rows), self.labels.select_rows(rows),
                                 self.feature_names, self.label_names)

    def __eq__(self, other):
        if not isinstance(other, MultiLabelDataset):
            return NotImplemented
        return (self.features.equals(other.features) and self.labels == other.labels
                and self.feature_names == other.feature_names
                and self.label_names == other.label_names)

    __hash__ = None

    def __repr__(self):
        return (f"MultiLabelDataset(n={self.n_samples}, d={self.features.n_cols}, "
                f"L={self.labels.n_cols})")


# ARFF ---------------------------------------------------------------------

@dataclass
class _Attribute:
    name: str
    nominal: Union[List[str], None]  # None for numeric attributes


_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _take_token(text, line_no):
    """Split the first (possibly quoted) token off ``text``."""
    text = text.lstrip()
    if not text:
        raise ArffError("missing attribute name", line_no)
    if text[0] in "'\"":
        q = text[0]
        end = text.find(q, 1)
        while end != -1 and text[end - 1] == "\\":
            end = text.find(q, end + 1)
        if end == -1:
            raise ArffError("unterminated quoted name", line_no)
        return text[1:end].replace("\\" + q, q), text[end + 1:]
    m = re.match(r"(\S+)(.*)$", text, re.S)
    return m.group(1), m.group(2)


def _unquote(value):
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
        return value[1:-1]
    return value


def _split_values(body):
    """Split a comma-separated list, honouring single and double quotes."""
    out, cur, quote = [], [], None
    for ch in body:
        if quote:
            cur.append(ch)
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
            cur.append(ch)
        elif ch == ",":
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [_unquote(v) for v in out]


def _parse_attribute(rest, line_no):
    name, type_text = _take_token(rest, line_no)
    type_text = type_text.strip()
    if type_text.startswith("{"):
        if not type_text.endswith("}"):
            raise ArffError(f"unterminated nominal value set for attribute {name!r}", line_no)
        values = [v for v in _split_values(type_text[1:-1])]
        if not values or any(v == "" for v in values):
            raise ArffError(f"empty nominal value for attribute {name!r}", line_no)
        return _Attribute(name, values)
    if type_text.lower() in _NUMERIC_TYPES:
        return _Attribute(name, None)
    raise ArffError(f"unsupported type {type_text!r} for attribute {name!r}", line_no)


def _feature_value(raw, attr, line_no):
    if raw == "?":
        raise ArffError("missing values ('?') are not supported", line_no)
    if attr.nominal is not None:
        try:
            return float(attr.nominal.index(raw))
        except ValueError:
            raise ArffError(f"value {raw!r} not declared for attribute {attr.name!r}", line_no)
    try:
        v = float(raw)
    except ValueError:
        raise ArffError(f"non-numeric value {raw!r} for attribute {attr.name!r}", line_no)
    if not np.isfinite(v):
        raise ArffError(f"non-finite value {raw!r} for attribute {attr.name!r}", line_no)
    return v


def _label_value(raw, attr, line_no):
    if raw == "?":
        raise ArffError("missing values ('?') are not supported", line_no)
    if raw in ("0", "1"):
        return raw == "1"
    if attr.nominal is None:
        try:
            v = float(raw)
        except ValueError:
            v = None
        if v in (0.0, 1.0):
            return v == 1.0
    raise SchemaError(f"label {attr.name!r} has value {raw!r} outside {{0,1}}", line_no)


def parse_arff(text: str, spec: LabelSpec) -> MultiLabelDataset:
    """Parse ARFF text into a :class:`MultiLabelDataset`.

    The ``spec.count`` attributes at ``spec.location`` become binary labels;
    all others become features. Dense rows (``a,b,c``) and sparse rows
    (``{index value, ...}``, unlisted indices are 0) may be mixed. If any
    sparse row is present the features are stored as CSR.
    """
    attrs: List[_Attribute] = []
    in_data = False
    seen_relation = False
    dense_rows, sparse_rows = [], []
    row_kinds = []
    line_nos = []
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            if not line.startswith("@"):
                raise ArffError(f"unexpected header line {line!r}", line_no)
            keyword, _, rest = line.partition(" ")
            if "\t" in keyword:
                keyword, _, more = keyword.partition("\t")
                rest = more + " " + rest
            keyword = keyword.lower()
            if keyword == "@relation":
                seen_relation = True
            elif keyword == "@attribute":
                if not seen_relation:
                    raise ArffError("@attribute before @relation", line_no)
                attrs.append(_parse_attribute(rest, line_no))
            elif keyword == "@data":
                if not attrs:
                    raise ArffError("@data before any @attribute", line_no)
                in_data = True
            else:
                raise ArffError(f"unknown header keyword {keyword!r}", line_no)
            continue
        if line.startswith("{"):
            if not line.endswith("}"):
                raise ArffError("unterminated sparse row", line_no)
            entries = {}
            body = line[1:-1].strip()
            if body:
                for item in _split_values(body):
                    idx_text, _, val = item.strip().partition(" ")
                    try:
                        idx = int(idx_text)
                    except ValueError:
                        raise ArffError(f"bad sparse index {idx_text!r}", line_no)
                    if not 0 <= idx < len(attrs):
                        raise ArffError(f"sparse index {idx} out of range", line_no)
                    if idx in entries:
                        raise ArffError(f"sparse index {idx} repeated", line_no)
                    entries[idx] = _unquote(val)
            row_kinds.append("sparse")
            sparse_rows.append(entries)
        else:
            values = _split_values(line)
            if len(values) != len(attrs):
                raise ArffError(
                    f"row has {len(values)} values, header declares {len(attrs)}", line_no
                )
            row_kinds.append("dense")
            dense_rows.append(values)
        line_nos.append(line_no)
    if not in_data:
        raise ArffError("no @data section")

    n_attr = len(attrs)
    if not 0 < spec.count < n_attr:
        raise ValueError(f"label count {spec.count} out of range for {n_attr} attributes")
    if spec.location is LabelLocation.AT_END:
        label_pos = list(range(n_attr - spec.count, n_attr))
    else:
        label_pos = list(range(spec.count))
    label_set = set(label_pos)
    feature_pos = [i for i in range(n_attr) if i not in label_set]
    for i in label_pos:
        nominal = attrs[i].nominal
        if nominal is not None and not set(nominal) <= {"0", "1"}:
            raise SchemaError(f"label attribute {attrs[i].name!r} declares values {nominal}")
    feature_col = {p: j for j, p in enumerate(feature_pos)}
    label_col = {p: j for j, p in enumerate(label_pos)}

    n = len(row_kinds)
    d = len(feature_pos)
    any_sparse = bool(sparse_rows)
    f_rows, f_cols, f_vals = [], [], []
    dense = None if any_sparse else np.zeros((n, d))
    l_rows, l_cols = [], []
    di = si = 0
    for r, (kind, line_no) in enumerate(zip(row_kinds, line_nos)):
        if kind == "dense":
            items = enumerate(dense_rows[di])
            di += 1
        else:
            items = sorted(sparse_rows[si].items())
            si += 1
        for pos, raw in items:
            attr = attrs[pos]
            if pos in label_col:
                if _label_value(raw, attr, line_no):
                    l_rows.append(r)
                    l_cols.append(label_col[pos])
            else:
                v = _feature_value(raw, attr, line_no)
                if dense is not None:
                    dense[r, feature_col[pos]] = v
                elif v != 0.0:
                    f_rows.append(r)
                    f_cols.append(feature_col[pos])
                    f_vals.append(v)
    if dense is not None:
        features = FeatureMatrix.dense(dense)
    else:
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(np.asarray(f_rows, dtype=np.int64), minlength=n), out=offsets[1:])
        features = FeatureMatrix.csr(n, d, offsets, f_cols, f_vals)
    labels = csr_from_arrays(l_rows, l_cols, n, spec.count)
    return MultiLabelDataset(
        features, labels,
        [attrs[p].name for p in feature_pos],
        [attrs[p].name for p in label_pos],
    )


def load_arff(path, spec: LabelSpec) -> MultiLabelDataset:
    return parse_arff(Path(path).read_text(encoding="utf-8"), spec)


def _quote_name(name):
    if re.fullmatch(r"[^\s'\"{},%]+", name):
        return name
    return "'" + name.replace("'", "\\'") + "'"


def write_arff(ds: MultiLabelDataset, spec: LabelSpec, relation="dataset", sparse=True) -> str:
    """Serialize ``ds`` as ARFF with labels placed per ``spec``.

    Features are written as ``numeric`` with ``repr`` precision so that
    :func:`parse_arff` reproduces them exactly.
    """
    if spec.count != ds.labels.n_cols:
        raise ValueError("spec.count must equal the number of labels")
    feat = [f"@attribute {_quote_name(n)} numeric" for n in ds.feature_names]
    lab = [f"@attribute {_quote_name(n)} {{0,1}}" for n in ds.label_names]
    at_start = spec.location is LabelLocation.AT_START
    header = [f"@relation {_quote_name(relation)}", ""]
    header += (lab + feat) if at_start else (feat + lab)
    header += ["", "@data"]
    d, L = ds.features.n_cols, ds.labels.n_cols
    f_off, l_off = (L, 0) if at_start else (0, d)
    X = ds.features.to_scipy()
    lines = []
    for i in range(ds.n_samples):
        row = X.getrow(i)
        feats = sorted(zip(row.indices.tolist(), row.data.tolist()))
        labs = ds.labels.row(i).tolist()
        if sparse:
            cells = [(f_off + j, repr(float(v))) for j, v in feats if v != 0.0]
            cells += [(l_off + j, "1") for j in labs]
            cells.sort()
            lines.append("{" + ", ".join(f"{p} {v}" for p, v in cells) + "}")
        else:
            fv = ["0.0"] * d
            for j, v in feats:
                fv[j] = repr(float(v))
            lv = ["0"] * L
            for j in labs:
                lv[j] = "1"
            lines.append(",".join((lv + fv) if at_start else (fv + lv)))
    return "\n".join(header + lines) + "\n"


# Cross-validation -----------------------------------------------------------

def kfold_indices(n: int, folds: int, seed: int):
    """Shuffled k-fold split of ``range(n)``.

    Returns a list of ``(train, test)`` sorted index arrays. Test blocks are
    contiguous slices of a seeded permutation; their sizes differ by at most 1.
    """
    if folds < 2 or folds > n:
        raise ValueError(f"folds must satisfy 2 <= folds <= n (got folds={folds}, n={n})")
    perm = np.random.default_rng(seed).permutation(n)
    out = []
    for block in np.array_split(perm, folds):
        mask = np.ones(n, dtype=bool)
        mask[block] = False
        out.append((np.flatnonzero(mask), np.sort(block)))
    return out


# Synthetic data -------------------------------------------------------------

def generate_synthetic(n: int, d: int, L: int, seed: int) -> MultiLabelDataset:
    """Linear-threshold multi-label data.

    Features are uniform on [-1, 1]. Label ``j`` is set on row ``i`` iff
    ``w_j . x_i + b_j > 0`` for random ``w_j ~ N(0, I)`` and ``b_j ~ N(0, 1)``
    drawn from the same generator after the features.
    """
    if min(n, d, L) < 1:
        raise ValueError("n, d and L must all be at least 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, d))
    W = rng.standard_normal((d, L))
    b = rng.standard_normal(L)
    rows, cols = np.nonzero(X @ W + b > 0)
    return MultiLabelDataset(FeatureMatrix.dense(X), csr_from_arrays(rows, cols, n, L))


@dataclass(frozen=True)
class DatasetStats:
    n: int
    d: int
    L: int
    label_cardinality: float
    label_density: float
    distinct_combinations: int


def dataset_stats(ds: MultiLabelDataset) -> DatasetStats:
    Y = ds.labels
    n, L = Y.shape
    card = Y.nnz / n if n else 0.0
    distinct = len({tuple(Y.row(i).tolist()) for i in range(n)})
    return DatasetStats(n, ds.features.n_cols, L, card, card / L if L else 0.0, distinct)

"""Label-space partitioning ensembles (RAkELd, RAkELo, community partitions).

Every ensemble is a list of Label Powerset models, one per label subset. A
disjoint partition assembles predictions by placing each subset's output in
its global columns. An overlapping family votes: a label is set when more
than half of the subsets containing it predict it.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from math import comb

import numpy as np

from .base import LogisticSpec
from .graph import build_cooccurrence_graph, communities_to_partition, greedy_modularity, \
    label_propagation
from .partition import LabelPartition
from .sparse import CsrBinaryMatrix, as_features, csr_from_arrays, select_columns
from .transform import LabelPowersetModel, lp_fit, lp_predict

__all__ = [
    "LabelPartition",
    "PartitionEnsembleModel",
    "SamplingError",
    "random_disjoint_partition",
    "random_overlapping_subsets",
    "ensemble_fit",
    "ensemble_predict",
    "community_partition",
    "community_ensemble_fit",
]

MAX_COVERAGE_DRAWS = 1000


class SamplingError(RuntimeError):
    pass


class SubsetFitError(ValueError):
    def __init__(self, index, cause):
        self.index = index
        super().__init__(f"fit failed for label subset {index}: {cause}")


def random_disjoint_partition(L: int, k: int, seed: int) -> LabelPartition:
    """Shuffle the labels and cut them into consecutive groups of ``k``."""
    if not 1 <= k <= L:
        raise ValueError(f"k must satisfy 1 <= k <= L (k={k}, L={L})")
    perm = np.random.default_rng(seed).permutation(L)
    return LabelPartition([perm[i:i + k] for i in range(0, L, k)], L)


def random_overlapping_subsets(L: int, k: int, m: int, seed: int) -> LabelPartition:
    """Draw ``m`` distinct ``k``-label subsets that together cover all labels.

    Subsets are sampled uniformly by rejection; a draw whose union misses a
    label is discarded as a whole and redrawn, at most ``MAX_COVERAGE_DRAWS``
    times.
    """
    if not 1 <= k <= L:
        raise ValueError(f"k must satisfy 1 <= k <= L (k={k}, L={L})")
    total = comb(L, k)
    if not 1 <= m <= total:
        raise ValueError(f"m must satisfy 1 <= m <= C({L},{k}) = {total} (m={m})")
    if m * k < L:
        raise ValueError(f"{m} subsets of size {k} cannot cover {L} labels")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_COVERAGE_DRAWS):
        chosen, seen = [], set()
        while len(chosen) < m:
            s = tuple(sorted(int(j) for j in rng.choice(L, size=k, replace=False)))
            if s not in seen:
                seen.add(s)
                chosen.append(s)
        if len({j for s in chosen for j in s}) == L:
            return LabelPartition(chosen, L, overlapping=True)
    raise SamplingError(f"no covering draw of {m} {k}-subsets in {MAX_COVERAGE_DRAWS} attempts")


class PartitionEnsembleModel:
    """One Label Powerset model per subset of ``partition``.

    Each submodel works in local label indices ``0..len(subset)-1``.
    """

    __slots__ = ("partition", "models", "spec")

    def __init__(self, partition: LabelPartition, models, spec):
        self.partition = partition
        self.models = tuple(models)
        self.spec = spec

    @property
    def n_labels(self):
        return self.partition.n_labels

    def predict(self, X):
        return ensemble_predict(self, X)


def ensemble_fit(X, Y: CsrBinaryMatrix, p: LabelPartition, spec=None, n_jobs=None):
    """Train a Label Powerset model on the columns of every subset in ``p``.

    ``n_jobs > 1`` trains subsets on a thread pool; results do not depend on
    scheduling.
    """
    X = as_features(X)
    if p.n_labels != Y.n_cols:
        raise ValueError(f"partition covers {p.n_labels} labels, Y has {Y.n_cols}")
    spec = spec or LogisticSpec()

    def fit_one(idx):
        try:
            return lp_fit(X, select_columns(Y, p.subsets[idx]), spec)
        except Exception as exc:
            raise SubsetFitError(idx, exc) from exc

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            models = list(pool.map(fit_one, range(len(p))))
    else:
        models = [fit_one(i) for i in range(len(p))]
    return PartitionEnsembleModel(p, models, spec)


def ensemble_predict(m: PartitionEnsembleModel, X) -> CsrBinaryMatrix:
    X = as_features(X)
    n, L = X.n_rows, m.n_labels
    rows, cols = [], []
    for subset, sub in zip(m.partition.subsets, m.models):
        local = lp_predict(sub, X)
        rows.append(local.row_ids())
        cols.append(np.asarray(subset, dtype=np.int64)[local.col_indices])
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    if not m.partition.overlapping:
        return csr_from_arrays(rows, cols, n, L)
    keys, votes = np.unique(rows * L + cols, return_counts=True)
    cover = np.zeros(L, dtype=np.int64)
    for subset in m.partition.subsets:
        cover[list(subset)] += 1
    key_cols = keys % L
    # strict majority of the subsets containing the label; exactly half is negative
    keep = 2 * votes > cover[key_cols]
    return csr_from_arrays(keys[keep] // L, key_cols[keep], n, L)


def community_partition(Y: CsrBinaryMatrix, method="greedy", seed=0) -> LabelPartition:
    """Disjoint partition from communities of the weighted co-occurrence graph.

    ``method`` is ``"greedy"`` (greedy modularity) or ``"lpa"`` (label
    propagation, seeded). An edgeless graph yields singleton subsets.
    """
    g = build_cooccurrence_graph(Y, weighted=True)
    if not g.edges:
        return LabelPartition([[j] for j in range(Y.n_cols)], Y.n_cols)
    if method == "greedy":
        a = greedy_modularity(g)
    elif method == "lpa":
        a = label_propagation(g, seed=seed)
    else:
        raise ValueError(f"unknown detection method {method!r}")
    return communities_to_partition(a)


def community_ensemble_fit(X, Y, method="greedy", spec=None, seed=0, n_jobs=None):
    return ensemble_fit(X, Y, community_partition(Y, method, seed), spec, n_jobs=n_jobs)

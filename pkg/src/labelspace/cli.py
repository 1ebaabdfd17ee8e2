"""Cross-validated benchmark runner.

    python -m labelspace bench --synthetic 500,10,6 --method br --folds 10 --seed 1

Writes a JSON report with per-fold timings and metrics plus mean and sample
standard deviation of every numeric field. Exit status is 0 on success, 2 on
usage or configuration errors and 1 on runtime failures.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .adapt import mlknn_fit, mlknn_predict
from .base import KnnSpec, LogisticSpec
from .data import LabelSpec, generate_synthetic, kfold_indices, load_arff
from .ensemble import community_partition, ensemble_fit, ensemble_predict, \
    random_disjoint_partition, random_overlapping_subsets
from .metrics import METRIC_NAMES, evaluate
from .sparse import density
from .transform import br_fit, br_predict, cc_fit, cc_predict, lp_fit, lp_predict

METHODS = ("br", "cc", "lp", "mlknn", "rakeld", "rakelo", "community")


class UsageError(Exception):
    """Bad command line or configuration file."""


@dataclass(frozen=True)
class RunConfig:
    method: str
    dataset: Optional[str] = None
    synthetic: Optional[Tuple[int, int, int]] = None
    labels: Optional[int] = None
    labels_at: str = "end"
    k: Optional[int] = None
    m: Optional[int] = None
    order: str = "identity"
    detection: str = "greedy"
    s: float = 1.0
    base: str = "logistic"
    base_knn_k: int = 5
    iters: int = 200
    lr: float = 0.1
    l2: float = 1e-4
    folds: int = 10
    seed: int = 0
    out: Optional[str] = None

    def base_spec(self):
        if self.base == "knn":
            return KnnSpec(k=self.base_knn_k)
        return LogisticSpec(iterations=self.iters, learning_rate=self.lr, l2=self.l2)


_FIELDS = {f.name for f in fields(RunConfig)}


def _validate(values: dict) -> RunConfig:
    """Check a merged flag/config mapping and build a :class:`RunConfig`."""
    unknown = set(values) - _FIELDS - {"config"}
    if unknown:
        raise UsageError(f"unknown configuration keys: {sorted(unknown)}")
    values = {k: v for k, v in values.items() if k in _FIELDS and v is not None}
    if "method" not in values:
        raise UsageError("--method is required")
    method = values["method"]
    if method not in METHODS:
        raise UsageError(f"--method must be one of {', '.join(METHODS)} (got {method!r})")
    if method in ("rakeld", "rakelo") and "k" not in values:
        raise UsageError(f"--k is required for --method {method}")
    if method == "rakelo" and "m" not in values:
        raise UsageError("--m is required for --method rakelo")
    has_ds, has_syn = "dataset" in values, "synthetic" in values
    if has_ds == has_syn:
        raise UsageError("exactly one of --dataset or --synthetic is required")
    if has_syn:
        values["synthetic"] = _parse_triple(values["synthetic"])
    if has_ds and "labels" not in values:
        raise UsageError("--labels is required with --dataset")
    choices = {"labels_at": ("start", "end"), "order": ("identity", "random"),
               "detection": ("lpa", "greedy"), "base": ("logistic", "knn")}
    for key, allowed in choices.items():
        if key in values and values[key] not in allowed:
            flag = "--" + key.replace("_", "-")
            raise UsageError(f"{flag} must be one of {', '.join(allowed)} (got {values[key]!r})")
    types = {"labels": int, "k": int, "m": int, "base_knn_k": int, "iters": int, "folds": int,
             "seed": int, "s": float, "lr": float, "l2": float}
    for key, typ in types.items():
        if key in values:
            v = values[key]
            flag = "--" + key.replace("_", "-")
            if isinstance(v, bool) or not isinstance(v, (int, float)) \
                    or (typ is int and not float(v).is_integer()):
                raise UsageError(f"{flag} expects {typ.__name__}, got {v!r}")
            values[key] = typ(v)
    if values.get("folds", 10) < 2:
        raise UsageError("--folds must be at least 2")
    if values.get("seed", 0) < 0:
        raise UsageError("--seed must be non-negative")
    for key in ("k", "m", "labels", "base_knn_k", "iters"):
        if key in values and values[key] < 1:
            raise UsageError(f"--{key.replace('_', '-')} must be positive")
    for key in ("s", "lr"):
        if key in values and not values[key] > 0:
            raise UsageError(f"--{key} must be positive")
    if values.get("l2", 0.0) < 0:
        raise UsageError("--l2 must be non-negative")
    return RunConfig(**values)


def _parse_triple(v):
    if isinstance(v, str):
        parts = v.split(",")
    else:
        parts = list(v)
    try:
        n, d, L = (int(p) for p in parts)
    except (TypeError, ValueError):
        raise UsageError(f"--synthetic expects N,D,L (got {v!r})")
    if min(n, d, L) < 1:
        raise UsageError("--synthetic values must be positive")
    return (n, d, L)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="labelspace", description="Multi-label classification benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    b = sub.add_parser("bench", help="cross-validated benchmark run")
    src = b.add_mutually_exclusive_group()
    src.add_argument("--dataset", help="ARFF file")
    src.add_argument("--synthetic", help="generate N,D,L synthetic data")
    b.add_argument("--labels", type=int, help="number of label attributes")
    b.add_argument("--labels-at", dest="labels_at", choices=("start", "end"))
    b.add_argument("--method", choices=METHODS)
    b.add_argument("--k", type=int, help="subset size (rakel) or neighbours (mlknn)")
    b.add_argument("--m", type=int, help="number of subsets (rakelo)")
    b.add_argument("--order", choices=("identity", "random"))
    b.add_argument("--detection", choices=("lpa", "greedy"))
    b.add_argument("--s", type=float, help="ML-kNN smoothing")
    b.add_argument("--base", choices=("logistic", "knn"))
    b.add_argument("--base-knn-k", dest="base_knn_k", type=int)
    b.add_argument("--iters", type=int)
    b.add_argument("--lr", type=float)
    b.add_argument("--l2", type=float)
    b.add_argument("--folds", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--out", help="report path (default stdout)")
    b.add_argument("--config", help="JSON file with the same keys as the flags")
    return parser


def parse_cli(argv) -> RunConfig:
    """Parse ``bench`` arguments; explicit flags override ``--config`` values."""
    args = vars(_build_parser().parse_args(argv))
    args.pop("command")
    values = {}
    cfg_path = args.pop("config")
    if cfg_path:
        try:
            loaded = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"--config: cannot read {cfg_path}: {exc}")
        if not isinstance(loaded, dict):
            raise UsageError("--config: top level must be a JSON object")
        values.update({k.replace("-", "_"): v for k, v in loaded.items()})
    values.update({k: v for k, v in args.items() if v is not None})
    return _validate(values)


# Running -------------------------------------------------------------------

def fold_seed(seed: int, fold: int) -> int:
    """Independent model seed for one fold, stable across execution order."""
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def _load(cfg: RunConfig):
    if cfg.synthetic is not None:
        n, d, L = cfg.synthetic
        return generate_synthetic(n, d, L, cfg.seed)
    return load_arff(cfg.dataset, LabelSpec(cfg.labels, cfg.labels_at))


def _fit_predict(cfg: RunConfig, X_train, Y_train, X_test, seed):
    """Train the configured method and predict; returns (pred, fit_s, predict_s)."""
    spec = cfg.base_spec()
    L = Y_train.n_cols
    t0 = time.perf_counter()
    if cfg.method == "br":
        model, predict = br_fit(X_train, Y_train, spec), br_predict
    elif cfg.method == "cc":
        model, predict = cc_fit(X_train, Y_train, spec, order=cfg.order, seed=seed), cc_predict
    elif cfg.method == "lp":
        model, predict = lp_fit(X_train, Y_train, spec), lp_predict
    elif cfg.method == "mlknn":
        model = mlknn_fit(X_train, Y_train, k=cfg.k or 10, s=cfg.s)
        predict = lambda m, X: mlknn_predict(m, X)[0]  # noqa: E731
    elif cfg.method == "rakeld":
        p = random_disjoint_partition(L, min(cfg.k, L), seed)
        model, predict = ensemble_fit(X_train, Y_train, p, spec), ensemble_predict
    elif cfg.method == "rakelo":
        p = random_overlapping_subsets(L, min(cfg.k, L), cfg.m, seed)
        model, predict = ensemble_fit(X_train, Y_train, p, spec), ensemble_predict
    elif cfg.method == "community":
        p = community_partition(Y_train, cfg.detection, seed)
        model, predict = ensemble_fit(X_train, Y_train, p, spec), ensemble_predict
    else:
        raise UsageError(f"unknown method {cfg.method!r}")
    t1 = time.perf_counter()
    pred = predict(model, X_test)
    t2 = time.perf_counter()
    return pred, t1 - t0, t2 - t1


def _summary(values):
    a = np.asarray(values, dtype=np.float64)
    return {"mean": float(a.mean()), "std": float(a.std(ddof=1)) if a.size > 1 else 0.0}


def aggregate(fold_records):
    """Mean and sample std of every numeric per-fold field."""
    out = {"metrics": {name: _summary([r["metrics"][name] for r in fold_records])
                       for name in METRIC_NAMES}}
    for key in ("train_time_s", "predict_time_s", "baseline_hamming_loss"):
        out[key] = _summary([r[key] for r in fold_records])
    return out


def run_benchmark(cfg: RunConfig) -> dict:
    ds = _load(cfg)
    X, Y = ds.features, ds.labels
    records = []
    for fold, (train, test) in enumerate(kfold_indices(ds.n_samples, cfg.folds, cfg.seed)):
        Y_train, Y_test = Y.select_rows(train), Y.select_rows(test)
        fold_warnings = []
        absent = np.flatnonzero(Y_train.column_sums() == 0).tolist()
        if absent:
            fold_warnings.append(f"labels {absent} never occur in the training rows")
        pred, fit_s, pred_s = _fit_predict(
            cfg, X.select_rows(train), Y_train, X.select_rows(test), fold_seed(cfg.seed, fold))
        records.append({
            "fold": fold,
            "n_train": int(train.size),
            "n_test": int(test.size),
            "train_time_s": round(fit_s, 6),
            "predict_time_s": round(pred_s, 6),
            "baseline_hamming_loss": density(Y_test),
            "metrics": evaluate(Y_test, pred).as_dict(),
            "warnings": fold_warnings,
        })
    config = asdict(cfg)
    if config["synthetic"] is not None:
        config["synthetic"] = list(config["synthetic"])
    return {"config": config, "folds": records, "aggregate": aggregate(records)}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_cli(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            report = run_benchmark(cfg)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = report_json(report)
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

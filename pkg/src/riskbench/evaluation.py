"""Metrics, cross-validated tuning, recursive feature elimination, and
the multi-model leaderboard with its CSV/text/JSON emitters.

All six metrics follow the standard definitions; MAPE is reported as a
fraction (multiply by 100 for percent) and skips rows whose target is
numerically zero, recording how many rows were actually used. RMSLE is
computed on log(1 + .) with predictions clipped at zero and requires
non-negative targets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .defaults import DISPLAY_NAMES, REPORT_FAMILIES, default_grids
from .errors import ValidationError
from .models import ModelSpec, feature_importance, fit as fit_model
from .preprocess import kfold_indices

_ZERO_TARGET = 1e-9

METRIC_NAMES = ("mae", "mse", "rmse", "r2", "rmsle", "mape")
LOWER_IS_BETTER = {"mae": True, "mse": True, "rmse": True, "r2": False, "rmsle": True, "mape": True}
SPARSE_LINEAR_FAMILIES = ("lasso", "elastic_net", "lasso_lars", "omp", "lars")


@dataclass(frozen=True)
class Metrics:
    mae: float
    mse: float
    rmse: float
    r2: float
    rmsle: float
    mape: float
    mape_effective_n: int

    def value(self, name: str) -> float:
        if name not in METRIC_NAMES:
            raise ValidationError(f"unknown metric {name!r}")
        return getattr(self, name)


def metrics(y, y_hat) -> Metrics:
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if len(y) == 0:
        raise ValidationError("metrics need at least one row")
    if len(y) != len(y_hat):
        raise ValidationError(f"length mismatch: {len(y)} targets vs {len(y_hat)} predictions")
    err = y - y_hat
    mae = float(np.abs(err).mean())
    mse = float((err ** 2).mean())
    rmse = math.sqrt(mse)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((err ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    if y.min() < 0:
        raise ValidationError("rmsle requires non-negative targets")
    log_err = np.log1p(np.clip(y_hat, 0.0, None)) - np.log1p(y)
    rmsle = math.sqrt(float((log_err ** 2).mean()))
    used = np.abs(y) >= _ZERO_TARGET
    effective_n = int(used.sum())
    mape = float((np.abs(err[used]) / np.abs(y[used])).mean()) if effective_n else float("nan")
    return Metrics(mae, mse, rmse, r2, rmsle, mape, effective_n)


def single_metric(y, y_hat, name: str) -> float:
    """One metric only; avoids the bundle's rmsle domain requirement when
    a different metric is asked for (CV on arbitrary-signed targets)."""
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if len(y) == 0:
        raise ValidationError("metrics need at least one row")
    if name == "mae":
        return float(np.abs(y - y_hat).mean())
    if name == "mse":
        return float(((y - y_hat) ** 2).mean())
    if name == "rmse":
        return math.sqrt(float(((y - y_hat) ** 2).mean()))
    if name == "r2":
        ss_tot = float(((y - y.mean()) ** 2).sum())
        ss_res = float(((y - y_hat) ** 2).sum())
        if ss_tot == 0.0:
            return 1.0 if ss_res == 0.0 else 0.0
        return 1.0 - ss_res / ss_tot
    if name == "rmsle":
        if y.min() < 0:
            raise ValidationError("rmsle requires non-negative targets")
        log_err = np.log1p(np.clip(y_hat, 0.0, None)) - np.log1p(y)
        return math.sqrt(float((log_err ** 2).mean()))
    if name == "mape":
        used = np.abs(y) >= _ZERO_TARGET
        if not used.any():
            return float("nan")
        return float((np.abs((y - y_hat)[used]) / np.abs(y[used])).mean())
    raise ValidationError(f"unknown metric {name!r}")


def _better(a: float, b: float, metric: str) -> bool:
    """Is a strictly better than b? NaN never wins."""
    if math.isnan(a):
        return False
    if math.isnan(b):
        return True
    return a < b if LOWER_IS_BETTER[metric] else a > b


@dataclass
class CVRow:
    spec: ModelSpec
    fold_scores: tuple[float, ...] = ()
    mean_score: float = float("nan")
    failed: bool = False
    error: str = ""


@dataclass
class GridSearchResult:
    best_spec: ModelSpec
    best_model: object
    rows: list[CVRow]
    metric: str


def grid_search_cv(grid: Sequence[ModelSpec], X, y, k: int = 10, seed: int = 0,
                   metric: str = "mape") -> GridSearchResult:
    """Pick the grid spec with the best mean k-fold validation metric.

    Ties go to the earliest spec in grid order; the winner is refitted
    on the full training data. Specs whose fold fits raise are marked
    failed and excluded (never aborting the search).
    """
    if not grid:
        raise ValidationError("empty hyperparameter grid")
    if metric not in METRIC_NAMES:
        raise ValidationError(f"unknown metric {metric!r}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    folds = kfold_indices(len(y), k, seed)
    all_idx = np.arange(len(y))
    rows: list[CVRow] = []
    for spec in grid:
        scores = []
        try:
            for fold in folds:
                train_mask = np.ones(len(y), dtype=bool)
                train_mask[fold] = False
                model = fit_model(spec, X[train_mask], y[train_mask])
                scores.append(single_metric(y[fold], model.predict(X[fold]), metric))
            rows.append(CVRow(spec, tuple(scores), float(np.mean(scores))))
        except Exception as exc:  # noqa: BLE001  (per-spec isolation is the contract)
            rows.append(CVRow(spec, tuple(scores), float("nan"), failed=True, error=str(exc)))
    best: CVRow | None = None
    for row in rows:
        if row.failed:
            continue
        if best is None or _better(row.mean_score, best.mean_score, metric):
            best = row
    if best is None:
        raise ValidationError("every spec in the grid failed cross-validation")
    best_model = fit_model(best.spec, X[all_idx], y)
    return GridSearchResult(best.spec, best_model, rows, metric)


@dataclass
class RFECVResult:
    metric: str
    sizes: tuple[int, ...]  # descending, p .. 1
    mean_scores: tuple[float, ...]  # native metric per size
    fold_scores_at_selected: tuple[float, ...]
    selected_size: int
    selected_features: tuple[str, ...]
    feature_sets: tuple[tuple[str, ...], ...]

    def cv_curve(self) -> tuple[float, ...]:
        """Scores oriented so that larger is better (for peak checks)."""
        sign = -1.0 if LOWER_IS_BETTER[self.metric] else 1.0
        return tuple(sign * s for s in self.mean_scores)


def rfecv(spec: ModelSpec, X, y, feature_names: Sequence[str] | None = None,
          k: int = 10, seed: int = 0, metric: str = "mape") -> RFECVResult:
    """Drop the least important feature one at a time, scoring every set
    size by k-fold CV, and keep the best-scoring size.

    Importance is |coefficient| for linear families and total split gain
    for trees; families without importance (dummy, knn) are rejected.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = X.shape[1]
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(p)]
    if len(names) != p:
        raise ValidationError(f"{p} columns but {len(names)} feature names")
    if spec.family in ("dummy", "knn"):
        raise ValidationError(f"family {spec.family!r} does not expose feature importance")
    folds = kfold_indices(len(y), k, seed)
    current = list(range(p))
    sizes: list[int] = []
    means: list[float] = []
    fold_records: list[tuple[float, ...]] = []
    sets: list[tuple[str, ...]] = []
    while current:
        sub = X[:, current]
        scores = []
        for fold in folds:
            train_mask = np.ones(len(y), dtype=bool)
            train_mask[fold] = False
            model = fit_model(spec, sub[train_mask], y[train_mask])
            scores.append(single_metric(y[fold], model.predict(sub[fold]), metric))
        sizes.append(len(current))
        means.append(float(np.mean(scores)))
        fold_records.append(tuple(scores))
        sets.append(tuple(names[i] for i in current))
        if len(current) == 1:
            break
        imp = np.asarray(feature_importance(fit_model(spec, sub, y)), dtype=np.float64)
        drop_local = int(np.argmin(imp))  # first minimum -> lowest index on ties
        current.pop(drop_local)
    best_pos = 0
    for pos in range(1, len(sizes)):
        better = _better(means[pos], means[best_pos], metric)
        tie_smaller = means[pos] == means[best_pos] and sizes[pos] < sizes[best_pos]
        if better or tie_smaller:
            best_pos = pos
    return RFECVResult(
        metric=metric,
        sizes=tuple(sizes),
        mean_scores=tuple(means),
        fold_scores_at_selected=fold_records[best_pos],
        selected_size=sizes[best_pos],
        selected_features=sets[best_pos],
        feature_sets=tuple(sets),
    )


@dataclass
class ReportRow:
    family: str
    display_name: str
    spec: ModelSpec | None
    metrics: Metrics | None
    beats_dummy: bool = False
    error: str = ""


@dataclass
class EvalReport:
    rows: list[ReportRow]
    selection_metric: str
    seed: int
    target: str
    n_train: int
    n_test: int

    def row(self, family: str) -> ReportRow:
        for r in self.rows:
            if r.family == family:
                return r
        raise ValidationError(f"report has no row for family {family!r}")


_COLUMNS = ("Model", "MAE", "MSE", "RMSE", "R-Squared", "RMSLE", "MAPE")


def _metric_cells(m: Metrics | None) -> list[str]:
    if m is None:
        return ["failed"] * 6
    return [f"{v:.4f}" for v in (m.mae, m.mse, m.rmse, m.r2, m.rmsle, m.mape)]


def report_to_csv(report: EvalReport) -> str:
    lines = [",".join(_COLUMNS)]
    for r in report.rows:
        lines.append(",".join(['"%s"' % r.display_name] + _metric_cells(r.metrics)))
    return "\n".join(lines) + "\n"


def report_to_text(report: EvalReport) -> str:
    body = [[r.display_name, *_metric_cells(r.metrics)] for r in report.rows]
    widths = [max(len(row[i]) for row in ([list(_COLUMNS)] + body)) for i in range(len(_COLUMNS))]
    def fmt(row):
        return "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                         for i, (cell, w) in enumerate(zip(row, widths)))
    lines = [fmt(list(_COLUMNS)), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in body)
    return "\n".join(lines) + "\n"


def report_to_json(report: EvalReport) -> str:
    doc = {
        "format": "leaderboard",
        "version": 1,
        "selection_metric": report.selection_metric,
        "seed": report.seed,
        "target": report.target,
        "n_train": report.n_train,
        "n_test": report.n_test,
        "rows": [
            {
                "family": r.family,
                "model": r.display_name,
                "metrics": None if r.metrics is None else {
                    "mae": r.metrics.mae, "mse": r.metrics.mse, "rmse": r.metrics.rmse,
                    "r2": r.metrics.r2, "rmsle": r.metrics.rmsle, "mape": r.metrics.mape,
                    "mape_effective_n": r.metrics.mape_effective_n,
                },
                "hyperparameters": None if r.spec is None else r.spec.hyperparameters,
                "beats_dummy": r.beats_dummy,
                "error": r.error,
            }
            for r in report.rows
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def leaderboard(X_train, y_train, X_test, y_test, *, families: Sequence[str] = REPORT_FAMILIES,
                grids: Mapping[str, Sequence[ModelSpec]] | None = None, k: int = 10,
                seed: int = 0, metric: str = "mape", target: str = "target") -> EvalReport:
    """Tune every family by CV on the training data, refit, and score the
    held-out test set. The dummy baseline is always included; per-family
    failures land in their row without aborting the report."""
    X_train = np.asarray(X_train, dtype=np.float64)
    X_test = np.asarray(X_test, dtype=np.float64)
    families = list(families)
    if "dummy" not in families:
        families.append("dummy")
    if grids is None:
        grids = default_grids(X_train.shape[1], seed, tuple(families))
    rows: list[ReportRow] = []
    for family in families:
        display = DISPLAY_NAMES[family]
        try:
            grid = list(grids[family])
            result = grid_search_cv(grid, X_train, y_train, k=k, seed=seed, metric=metric)
            test_metrics = metrics(y_test, result.best_model.predict(X_test))
            rows.append(ReportRow(family, display, result.best_spec, test_metrics))
        except Exception as exc:  # noqa: BLE001  (contract: record, never abort)
            rows.append(ReportRow(family, display, None, None, error=str(exc)))
    dummy_row = next(r for r in rows if r.family == "dummy")
    for r in rows:
        if r.metrics is not None and dummy_row.metrics is not None and r.family != "dummy":
            r.beats_dummy = _better(r.metrics.value(metric), dummy_row.metrics.value(metric), metric)
    def sort_key(r: ReportRow):
        if r.metrics is None:
            return (2, 0.0, r.family)
        v = r.metrics.value(metric)
        if math.isnan(v):
            return (1, 0.0, r.family)
        return (0, v if LOWER_IS_BETTER[metric] else -v, r.family)
    rows.sort(key=sort_key)
    return EvalReport(rows, metric, seed, target, len(y_train), len(y_test))


def lasso_importance(model, feature_names: Sequence[str]):
    """Nonzero coefficients sorted by |value| descending, plus the count
    of eliminated (exactly zero) features. Signs are preserved."""
    if getattr(model, "family", None) not in SPARSE_LINEAR_FAMILIES:
        raise ValidationError(
            f"importance report needs a sparse linear family, got {getattr(model, 'family', None)!r}"
        )
    coef = np.asarray(model.coef, dtype=np.float64)
    if len(coef) != len(feature_names):
        raise ValidationError(f"{len(coef)} coefficients but {len(feature_names)} names")
    nonzero = [(feature_names[i], float(coef[i])) for i in range(len(coef)) if coef[i] != 0.0]
    nonzero.sort(key=lambda t: (-abs(t[1]), feature_names.index(t[0])))
    eliminated = int((coef == 0.0).sum())
    return nonzero, eliminated


def importance_to_csv(pairs: Sequence[tuple[str, float]], eliminated: int) -> str:
    lines = ["feature,coefficient"]
    lines.extend(f'"{name}",{value!r}' for name, value in pairs)
    lines.append(f'"__eliminated__",{eliminated}')
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FoldSummary:
    """Tukey box summary; whiskers end at the most extreme scores within
    1.5*IQR of the quartiles, everything beyond is an outlier."""

    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    outliers: tuple[float, ...]


def fold_distribution_export(scores_by_model: Mapping[str, Sequence[float]]) -> dict[str, FoldSummary]:
    out: dict[str, FoldSummary] = {}
    for name, scores in scores_by_model.items():
        arr = np.asarray(list(scores), dtype=np.float64)
        if len(arr) < 4:
            raise ValidationError(f"{name}: need at least 4 scores, got {len(arr)}")
        q1, med, q3 = (float(np.percentile(arr, q)) for q in (25, 50, 75))
        iqr = q3 - q1
        lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
        outliers = tuple(float(v) for v in np.sort(arr[(arr < lo_fence) | (arr > hi_fence)]))
        out[name] = FoldSummary(float(inside.min()), q1, med, q3, float(inside.max()), outliers)
    return out


def fold_summary_to_csv(summaries: Mapping[str, FoldSummary]) -> str:
    lines = ["model,min,q1,median,q3,max,outliers"]
    for name, s in summaries.items():
        outs = ";".join(repr(v) for v in s.outliers)
        lines.append(f'"{name}",{s.minimum!r},{s.q1!r},{s.median!r},{s.q3!r},{s.maximum!r},"{outs}"')
    return "\n".join(lines) + "\n"


def fold_summary_to_json(summaries: Mapping[str, FoldSummary]) -> str:
    doc = {
        name: {
            "min": s.minimum, "q1": s.q1, "median": s.median,
            "q3": s.q3, "max": s.maximum, "outliers": list(s.outliers),
        }
        for name, s in summaries.items()
    }
    return json.dumps({"format": "fold-distribution", "version": 1, "models": doc},
                      sort_keys=True, indent=2) + "\n"

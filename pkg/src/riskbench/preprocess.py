"""Table-to-matrix preprocessing: smoothed target encoding of
categoricals, chained gradient-boosted imputation of numericals,
stratified splitting, k-fold indexing and standardization.

A categorical level c with count(c) training rows and in-level target
mean mean(c) encodes to

    (count(c) * mean(c) + M * mean(target)) / (count(c) + M)

so rare levels shrink toward the global target mean, with smoothing mass
M. Missing categorical values form their own level; levels unseen at
fit time map to the global mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .models import ModelSpec, fit as fit_model
from .table import Column, DataTable, KIND_CATEGORICAL, KIND_NUMERICAL

_MISSING_LEVEL = "__missing__"


@dataclass
class MEstimateEncoder:
    """Per-feature level -> encoded value maps fitted on training rows only."""

    smoothing: float
    global_mean: float
    mappings: dict[str, dict[str, float]]
    target_name: str

    def encode(self, table: DataTable) -> DataTable:
        """Replace every fitted categorical column by its encoded values."""
        cols = []
        for c in table.columns:
            if c.name not in self.mappings:
                cols.append(c.copy())
                continue
            mapping = self.mappings[c.name]
            out = np.empty(len(c.values), dtype=np.float64)
            for i, (v, m) in enumerate(zip(c.values, c.mask)):
                level = _MISSING_LEVEL if m else str(v)
                out[i] = mapping.get(level, self.global_mean)
            cols.append(Column(c.name, KIND_NUMERICAL, out, np.zeros(len(out), dtype=bool)))
        return DataTable(cols, {k: v.copy() for k, v in table.targets.items()})

    def to_json(self) -> str:
        doc = {
            "format": "m-estimate-encoder",
            "version": 1,
            "smoothing": self.smoothing,
            "global_mean": self.global_mean,
            "target": self.target_name,
            "mappings": self.mappings,
        }
        return json.dumps(doc, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MEstimateEncoder":
        doc = json.loads(text)
        return cls(doc["smoothing"], doc["global_mean"],
                   {k: dict(v) for k, v in doc["mappings"].items()}, doc["target"])


def fit_mestimate(train: DataTable, target: str, m: float = 1.0) -> MEstimateEncoder:
    if m < 0:
        raise ValidationError("smoothing M must be >= 0")
    y = train.target(target)
    global_mean = float(y.mean()) if len(y) else 0.0
    mappings: dict[str, dict[str, float]] = {}
    for c in train.columns:
        if c.kind != KIND_CATEGORICAL:
            continue
        sums: dict[str, float] = {}
        counts: dict[str, int] = {}
        for v, masked, yi in zip(c.values, c.mask, y):
            level = _MISSING_LEVEL if masked else str(v)
            sums[level] = sums.get(level, 0.0) + float(yi)
            counts[level] = counts.get(level, 0) + 1
        mapping = {}
        for level, cnt in counts.items():
            level_mean = sums[level] / cnt
            mapping[level] = (cnt * level_mean + m * global_mean) / (cnt + m)
        mappings[c.name] = mapping
    return MEstimateEncoder(m, global_mean, mappings, target)


@dataclass(frozen=True)
class ImputeConfig:
    max_rounds: int = 10
    tol: float = 1e-3
    learner: tuple[tuple[str, object], ...] = (
        ("n_rounds", 40),
        ("learning_rate", 0.15),
        ("max_leaves", 8),
        ("min_samples_leaf", 5),
        ("n_bins", 32),
    )

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValidationError("max_rounds must be >= 1")
        if not self.tol > 0:
            raise ValidationError("tol must be > 0")

    def learner_params(self) -> dict:
        return dict(self.learner)


def _ordinal_codes(col: Column) -> np.ndarray:
    # categoricals enter the imputer design matrix as level indices;
    # missing becomes its own code (-1)
    levels = sorted({str(v) for v, m in zip(col.values, col.mask) if not m})
    index = {lv: i for i, lv in enumerate(levels)}
    return np.array(
        [-1.0 if m else float(index[str(v)]) for v, m in zip(col.values, col.mask)]
    )


def iterative_impute(table: DataTable, config: ImputeConfig | None = None,
                     seed: int = 0) -> DataTable:
    """Fill numerical missing cells by chained boosted regressions.

    Missing cells start at column medians; features are processed in
    descending-missingness order, each round refitting a boosted
    regressor per feature on its observed rows against all other
    (current) columns, so later fills see earlier ones. Stops after
    max_rounds or when the largest imputed-cell change drops below tol.
    Observed cells are never altered.
    """
    config = config or ImputeConfig()
    out = table.copy()
    todo = []
    for c in out.columns:
        if c.kind != KIND_NUMERICAL or not c.mask.any():
            continue
        if c.mask.all():
            raise ValidationError(f"column {c.name} is entirely missing; cannot impute")
        todo.append(c.name)
    if not todo:
        return out
    todo.sort(key=lambda name: (-float(out.column(name).mask.mean()), out.feature_names.index(name)))

    work: dict[str, np.ndarray] = {}
    masks: dict[str, np.ndarray] = {}
    for c in out.columns:
        if c.kind == KIND_NUMERICAL:
            work[c.name] = c.values.copy()
            masks[c.name] = c.mask
        else:
            work[c.name] = _ordinal_codes(c)
            masks[c.name] = np.zeros(len(c.values), dtype=bool)
    for name in todo:
        observed = work[name][~masks[name]]
        work[name][masks[name]] = float(np.median(observed))

    order = [c.name for c in out.columns]
    rounds_run = 0
    for round_no in range(config.max_rounds):
        max_change = 0.0
        for k, name in enumerate(todo):
            miss = masks[name]
            predictors = [n for n in order if n != name]
            X = np.column_stack([work[n] for n in predictors])
            y = work[name]
            spec = ModelSpec(
                "gbm_leafwise",
                config.learner_params(),
                seed=int(np.random.SeedSequence([seed, round_no, k]).generate_state(1)[0] % (2**31)),
            )
            model = fit_model(spec, X[~miss], y[~miss])
            predicted = model.predict(X[miss])
            max_change = max(max_change, float(np.abs(predicted - y[miss]).max(initial=0.0)))
            work[name] = y.copy()
            work[name][miss] = predicted
        rounds_run = round_no + 1
        if max_change < config.tol:
            break

    for c in out.columns:
        if c.name in todo:
            c.values[:] = work[c.name]
            c.mask[:] = False
    out.impute_rounds_run = rounds_run  # type: ignore[attr-defined]
    return out


def impute_summary_json(config: ImputeConfig, rounds_run: int) -> str:
    doc = {
        "format": "impute-run",
        "version": 1,
        "max_rounds": config.max_rounds,
        "tol": config.tol,
        "learner": dict(config.learner),
        "rounds_run": rounds_run,
    }
    return json.dumps(doc, sort_keys=True) + "\n"


@dataclass(frozen=True)
class SplitPlan:
    test_fraction: float = 0.2
    strata_bins: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValidationError("test_fraction must be strictly inside (0, 1)")
        if self.strata_bins < 1:
            raise ValidationError("strata_bins must be >= 1")


def stratified_split_indices(y: np.ndarray, plan: SplitPlan):
    """(train_idx, test_idx, fell_back) with equal-frequency target bins.

    A degenerate target (all values equal) falls back to a plain random
    split, flagged in the third return value.
    """
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if n < plan.strata_bins:
        raise ValidationError(f"need at least strata_bins={plan.strata_bins} rows, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence([plan.seed, 17]))
    n_test = int(round(n * plan.test_fraction))
    fell_back = bool(np.all(y == y[0]))
    if fell_back:
        bins = np.zeros(n, dtype=int)
    else:
        qs = np.quantile(y, np.arange(1, plan.strata_bins) / plan.strata_bins)
        bins = np.searchsorted(qs, y, side="left")
    order = []
    for b in np.unique(bins):
        members = np.flatnonzero(bins == b)
        order.append(members[rng.permutation(len(members))])
    # largest-remainder allocation so the test set is exactly n_test rows
    quotas = [len(m) * plan.test_fraction for m in order]
    base = [int(np.floor(q)) for q in quotas]
    short = n_test - sum(base)
    remainders = sorted(range(len(order)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in remainders[:max(short, 0)]:
        base[i] += 1
    test_parts = [m[:k] for m, k in zip(order, base)]
    test_idx = np.sort(np.concatenate(test_parts).astype(int)) if test_parts else np.array([], dtype=int)
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    return train_idx, test_idx, fell_back


def stratified_split(table: DataTable, plan: SplitPlan, target: str):
    train_idx, test_idx, fell_back = stratified_split_indices(table.target(target), plan)
    return table.take(train_idx), table.take(test_idx), fell_back


def kfold_indices(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """k disjoint validation folds partitioning range(n); sizes differ by <= 1."""
    if k < 2:
        raise ValidationError("k must be >= 2")
    if k > n:
        raise ValidationError(f"k={k} exceeds n={n}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 19]))
    perm = rng.permutation(n)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    folds = []
    start = 0
    for s in sizes:
        folds.append(np.sort(perm[start:start + s]))
        start += s
    return folds


@dataclass
class Standardizer:
    """Column-wise (x - mean) / sd with training statistics; sample sd
    (ddof=1). Constant columns pass through unchanged and are flagged."""

    mean: np.ndarray
    sd: np.ndarray
    constant: np.ndarray  # bool per column

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != len(self.mean):
            raise ValidationError(
                f"standardizer fitted on {len(self.mean)} columns, got {X.shape[1]}"
            )
        sd = np.where(self.constant, 1.0, self.sd)
        mean = np.where(self.constant, 0.0, self.mean)
        return (X - mean) / sd

    def to_json(self) -> str:
        doc = {
            "format": "standardizer",
            "version": 1,
            "mean": self.mean.tolist(),
            "sd": self.sd.tolist(),
            "constant": self.constant.astype(int).tolist(),
        }
        return json.dumps(doc, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Standardizer":
        doc = json.loads(text)
        return cls(np.array(doc["mean"]), np.array(doc["sd"]),
                   np.array(doc["constant"], dtype=bool))


def fit_standardize(X: np.ndarray) -> Standardizer:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("fit_standardize expects a 2-d matrix")
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    constant = sd == 0
    sd = np.where(constant, 1.0, sd)
    return Standardizer(mean, sd, constant)

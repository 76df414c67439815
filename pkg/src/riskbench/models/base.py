"""Model zoo plumbing: specs, input checks, registry, shared containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from ..errors import ValidationError

# Roster of fit-able families. The 18 canonical report families are in
# defaults.REPORT_FAMILIES; plain "lars" is available but not on the
# default report roster.
FAMILIES = (
    "ols",
    "ridge",
    "lasso",
    "elastic_net",
    "lars",
    "lasso_lars",
    "omp",
    "bayesian_ridge",
    "huber",
    "passive_aggressive",
    "knn",
    "decision_tree",
    "random_forest",
    "extra_trees",
    "adaboost",
    "gbm_depthwise",
    "gbm_leafwise",
    "gbm_oblivious",
    "dummy",
)


@dataclass
class ModelSpec:
    """A model family plus hyperparameters and the seed all randomness flows from."""

    family: str
    hyperparameters: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown model family {self.family!r}")

    def get(self, name: str, default=None):
        return self.hyperparameters.get(name, default)

    def with_params(self, **params) -> "ModelSpec":
        merged = dict(self.hyperparameters)
        merged.update(params)
        return ModelSpec(self.family, merged, self.seed)


def check_Xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise ValidationError(f"X must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if y.shape[0] < 1:
        raise ValidationError("need at least one training row")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValidationError("non-finite values in training data")
    return X, y


def check_predict_X(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValidationError(
            f"prediction input must be 2-d with {n_features} columns, got shape {X.shape}"
        )
    return X


@dataclass
class LinearModel:
    """Intercept + coefficient vector; shared by the whole linear family."""

    family: str
    intercept: float
    coef: np.ndarray
    iterations: int = 0
    converged: bool = True
    flags: tuple[str, ...] = ()

    def predict(self, X) -> np.ndarray:
        X = check_predict_X(X, len(self.coef))
        return X @ self.coef + self.intercept

    def feature_importance(self) -> np.ndarray:
        return np.abs(self.coef)


@dataclass
class DummyModel:
    """Baseline that always predicts the training-target mean."""

    family: str
    constant: float
    n_features: int

    def predict(self, X) -> np.ndarray:
        X = check_predict_X(X, self.n_features)
        return np.full(X.shape[0], self.constant)


def fit_dummy(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> DummyModel:
    return DummyModel("dummy", float(y.mean()), X.shape[1])


_FITTERS: dict[str, Callable[[ModelSpec, np.ndarray, np.ndarray], Any]] = {}
_PARAM_RULES: dict[str, dict[str, tuple[Callable[[Any], bool], str]]] = {}


def register(family: str, params: Mapping[str, tuple[Callable[[Any], bool], str]] | None = None):
    def deco(fn):
        _FITTERS[family] = fn
        _PARAM_RULES[family] = dict(params or {})
        return fn
    return deco


def validate_spec(spec: ModelSpec) -> None:
    rules = _PARAM_RULES.get(spec.family)
    if rules is None:
        raise ValidationError(f"no fitter registered for family {spec.family!r}")
    for name, value in spec.hyperparameters.items():
        if name not in rules:
            raise ValidationError(f"{spec.family}: unknown hyperparameter {name!r}")
        ok, message = rules[name]
        if not ok(value):
            raise ValidationError(f"{spec.family}: hyperparameter {name}={value!r} {message}")


def fit(spec: ModelSpec, X, y):
    """Train one model; deterministic in (spec, data)."""
    validate_spec(spec)
    X, y = check_Xy(X, y)
    return _FITTERS[spec.family](spec, X, y)


def predict(model, X) -> np.ndarray:
    out = model.predict(X)
    if not np.isfinite(out).all():
        raise ValidationError(f"{model.family}: non-finite predictions")
    return out


register("dummy", {})(fit_dummy)


def _positive(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


def _non_negative(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0


def _positive_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


def _fraction_01(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and 0 <= v <= 1


def _rate_01(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and 0 < v <= 1


RULE_POSITIVE = (_positive, "must be > 0")
RULE_NON_NEGATIVE = (_non_negative, "must be >= 0")
RULE_POSITIVE_INT = (_positive_int, "must be an integer >= 1")
RULE_FRACTION = (_fraction_01, "must be in [0, 1]")
RULE_RATE = (_rate_01, "must be in (0, 1]")

"""Orthogonal matching pursuit: greedy selection with a hard cap on the
number of nonzero coefficients.

Each step activates the feature most correlated with the current
residual, then refits least squares on the whole active set, so the
residual norm never increases along the path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .base import LinearModel, ModelSpec, register, RULE_POSITIVE_INT

_CORR_EPS = 1e-12


@dataclass
class OMPStep:
    feature: int
    coef: np.ndarray  # dense, over all features
    residual_norm: float


@dataclass
class OMPPath:
    steps: list[OMPStep]
    flags: tuple[str, ...]


def omp_path(X, y, k_max: int) -> OMPPath:
    """Greedy path on centered data; stops early on zero correlation or
    a rank-deficient active set (flagged)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = X.shape
    if not 1 <= k_max <= p:
        raise ValidationError(f"k_max must be in 1..{p}, got {k_max}")
    x_mean = X.mean(axis=0)
    Xc = X - x_mean
    yc = y - y.mean()
    active: list[int] = []
    steps: list[OMPStep] = []
    flags: list[str] = []
    resid = yc.copy()
    scale = max(float(np.abs(yc).max(initial=0.0)), 1.0)
    for _ in range(k_max):
        corr = Xc.T @ resid
        corr[active] = 0.0
        j = int(np.argmax(np.abs(corr)))  # first max -> lowest index on ties
        if abs(corr[j]) <= _CORR_EPS * scale * n:
            break
        active.append(j)
        sub = Xc[:, active]
        sol, _, rank, _ = np.linalg.lstsq(sub, yc, rcond=None)
        if rank < len(active):
            active.pop()
            flags.append("rank_deficient_stop")
            break
        coef = np.zeros(p)
        coef[active] = sol
        resid = yc - sub @ sol
        steps.append(OMPStep(j, coef, float(np.linalg.norm(resid))))
    return OMPPath(steps, tuple(flags))


@register("omp", {"n_nonzero_coefs": RULE_POSITIVE_INT})
def fit_omp(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> LinearModel:
    p = X.shape[1]
    k = min(spec.get("n_nonzero_coefs", max(1, p // 10)), p)
    path = omp_path(X, y, k)
    coef = path.steps[-1].coef if path.steps else np.zeros(p)
    intercept = float(y.mean() - X.mean(axis=0) @ coef)
    return LinearModel("omp", intercept, coef, iterations=len(path.steps), flags=path.flags)

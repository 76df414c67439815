"""Linear family: least squares, ridge, lasso/elastic net via coordinate
descent, Huber via iteratively reweighted least squares, and the online
passive-aggressive regressor.

Penalized objectives use the (1/2n)||y - Xb||^2 scaling with the penalty
alpha * (l1_ratio*||b||_1 + (1 - l1_ratio)/2 * ||b||^2), so elastic net
reduces exactly to lasso at l1_ratio=1 and to ridge at l1_ratio=0 with
the same alpha. Intercepts are never penalized (data is centered).
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .base import (
    LinearModel,
    ModelSpec,
    register,
    RULE_NON_NEGATIVE,
    RULE_POSITIVE,
    RULE_POSITIVE_INT,
    RULE_FRACTION,
)


def soft_threshold(z: float, gamma: float) -> float:
    """sign(z) * max(|z| - gamma, 0); the coordinate-descent kernel."""
    if gamma < 0:
        raise ValidationError("soft_threshold: gamma must be >= 0")
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def _center(X: np.ndarray, y: np.ndarray):
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    return X - x_mean, y - y_mean, x_mean, y_mean


def _finish(family: str, coef: np.ndarray, x_mean: np.ndarray, y_mean: float,
            iterations=0, converged=True, flags=()) -> LinearModel:
    intercept = float(y_mean - x_mean @ coef)
    return LinearModel(family, intercept, coef, iterations, converged, tuple(flags))


@register("ols", {})
def fit_ols(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> LinearModel:
    Xc, yc, x_mean, y_mean = _center(X, y)
    coef, _, rank, _ = np.linalg.lstsq(Xc, yc, rcond=None)
    flags = () if rank == X.shape[1] else ("rank_deficient_pinv",)
    return _finish("ols", coef, x_mean, y_mean, flags=flags)


@register("ridge", {"alpha": RULE_NON_NEGATIVE})
def fit_ridge(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> LinearModel:
    alpha = spec.get("alpha", 1.0)
    Xc, yc, x_mean, y_mean = _center(X, y)
    n, p = Xc.shape
    # closed form of (1/2n)||r||^2 + (alpha/2)||b||^2
    A = Xc.T @ Xc / n + alpha * np.eye(p)
    b = Xc.T @ yc / n
    try:
        coef = np.linalg.solve(A, b)
        flags = ()
    except np.linalg.LinAlgError:
        coef = np.linalg.pinv(A) @ b
        flags = ("rank_deficient_pinv",)
    return _finish("ridge", coef, x_mean, y_mean, flags=flags)


def _coordinate_descent(Xc: np.ndarray, yc: np.ndarray, l1: float, l2: float,
                        max_iter: int, tol: float):
    """Cyclic coordinate descent on centered data.

    Minimizes (1/2n)||y - Xb||^2 + l1*||b||_1 + (l2/2)*||b||^2.
    Stops when the largest coordinate move in a sweep is below tol.
    """
    n, p = Xc.shape
    col_nsq = (Xc * Xc).sum(axis=0) / n  # ||x_j||^2 / n
    coef = np.zeros(p)
    resid = yc.copy()
    for sweep in range(1, max_iter + 1):
        max_move = 0.0
        for j in range(p):
            if col_nsq[j] == 0.0:
                continue
            old = coef[j]
            rho = (Xc[:, j] @ resid) / n + col_nsq[j] * old
            new = soft_threshold(rho, l1) / (col_nsq[j] + l2)
            if new != old:
                resid += Xc[:, j] * (old - new)
                coef[j] = new
                max_move = max(max_move, abs(new - old))
        if max_move < tol:
            return coef, sweep, True
    return coef, max_iter, False


def elastic_net_objective(Xc, yc, coef, alpha, l1_ratio) -> float:
    n = len(yc)
    r = yc - Xc @ coef
    return float(
        (r @ r) / (2 * n)
        + alpha * l1_ratio * np.abs(coef).sum()
        + alpha * (1 - l1_ratio) / 2 * (coef @ coef)
    )


def lasso_kkt_violation(Xc, yc, coef, alpha) -> float:
    """Largest KKT residual; 0 at the exact optimum."""
    n = len(yc)
    grad = Xc.T @ (yc - Xc @ coef) / n
    out = 0.0
    for j in range(len(coef)):
        if coef[j] > 0:
            out = max(out, abs(grad[j] - alpha))
        elif coef[j] < 0:
            out = max(out, abs(grad[j] + alpha))
        else:
            out = max(out, max(abs(grad[j]) - alpha, 0.0))
    return out


_CD_PARAMS = {
    "alpha": RULE_NON_NEGATIVE,
    "l1_ratio": RULE_FRACTION,
    "max_iter": RULE_POSITIVE_INT,
    "tol": RULE_POSITIVE,
}


def _fit_cd(family: str, spec: ModelSpec, X, y, l1_ratio: float) -> LinearModel:
    alpha = spec.get("alpha", 0.01)
    max_iter = spec.get("max_iter", 2000)
    tol = spec.get("tol", 1e-8)
    Xc, yc, x_mean, y_mean = _center(X, y)
    coef, sweeps, converged = _coordinate_descent(
        Xc, yc, l1=alpha * l1_ratio, l2=alpha * (1 - l1_ratio), max_iter=max_iter, tol=tol
    )
    return _finish(family, coef, x_mean, y_mean, iterations=sweeps, converged=converged)


@register("lasso", _CD_PARAMS)
def fit_lasso(spec: ModelSpec, X, y) -> LinearModel:
    return _fit_cd("lasso", spec, X, y, l1_ratio=1.0)


@register("elastic_net", _CD_PARAMS)
def fit_elastic_net(spec: ModelSpec, X, y) -> LinearModel:
    return _fit_cd("elastic_net", spec, X, y, l1_ratio=spec.get("l1_ratio", 0.5))


def lasso_deactivation_alpha(X, y) -> float:
    """Smallest alpha at which the lasso solution is exactly zero."""
    Xc, yc, _, _ = _center(np.asarray(X, float), np.asarray(y, float).ravel())
    n = len(yc)
    return float(np.abs(Xc.T @ yc / n).max())


@register("huber", {"delta": RULE_POSITIVE, "alpha": RULE_NON_NEGATIVE,
                    "max_iter": RULE_POSITIVE_INT, "tol": RULE_POSITIVE})
def fit_huber(spec: ModelSpec, X, y) -> LinearModel:
    """Huber loss minimized by IRLS; a small ridge term keeps solves stable."""
    delta = spec.get("delta", 1.35)
    alpha = spec.get("alpha", 1e-4)
    max_iter = spec.get("max_iter", 200)
    tol = spec.get("tol", 1e-8)
    Xc, yc, x_mean, y_mean = _center(X, y)
    n, p = Xc.shape
    coef = np.zeros(p)
    intercept_c = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        r = yc - Xc @ coef - intercept_c
        absr = np.abs(r)
        w = np.where(absr <= delta, 1.0, delta / np.maximum(absr, 1e-300))
        sw = np.sqrt(w)
        Xw = Xc * sw[:, None]
        A = Xw.T @ Xw / n + alpha * np.eye(p)
        b = Xw.T @ (sw * (yc - intercept_c)) / n
        new_coef = np.linalg.solve(A, b)
        new_intercept = float((w * (yc - Xc @ new_coef)).sum() / w.sum())
        move = max(np.abs(new_coef - coef).max(initial=0.0), abs(new_intercept - intercept_c))
        coef, intercept_c = new_coef, new_intercept
        if move < tol:
            converged = True
            break
    model = _finish("huber", coef, x_mean, y_mean, iterations=it, converged=converged)
    model.intercept += intercept_c
    return model


@register("passive_aggressive", {"C": RULE_POSITIVE, "epsilon": RULE_NON_NEGATIVE})
def fit_passive_aggressive(spec: ModelSpec, X, y) -> LinearModel:
    """Epsilon-insensitive PA-I updates, one pass in data order."""
    C = spec.get("C", 1.0)
    eps = spec.get("epsilon", 0.1)
    n, p = X.shape
    coef = np.zeros(p)
    intercept = 0.0
    for i in range(n):
        x = X[i]
        r = y[i] - (x @ coef + intercept)
        loss = abs(r) - eps
        if loss <= 0:
            continue
        tau = min(C, loss / (x @ x + 1.0))  # +1 for the intercept coordinate
        step = np.sign(r) * tau
        coef += step * x
        intercept += step
    return LinearModel("passive_aggressive", float(intercept), coef, iterations=n)

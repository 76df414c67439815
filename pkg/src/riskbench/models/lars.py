"""Least-angle regression path, with and without the lasso modification.

The path starts from the zero vector, activates the feature most
correlated with the residual, then moves along the direction equiangular
between the active features until a new feature ties (or, with the lasso
modification, until an active coefficient crosses zero and is dropped).
The max-correlation level C shrinks linearly within each step, so the
penalty scale lambda = C/n is exact at every knot and solutions at
intermediate penalties interpolate linearly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import LinearModel, ModelSpec, register, RULE_NON_NEGATIVE, RULE_POSITIVE_INT

_EPS = 1e-12


@dataclass
class LarsKnot:
    lam: float  # max|X'r|/n after the step
    coef: np.ndarray
    active: tuple[int, ...]


@dataclass
class LarsPath:
    knots: list[LarsKnot]
    flags: tuple[str, ...]


def lars_path(Xc: np.ndarray, yc: np.ndarray, lasso_mod: bool,
              max_active: int | None = None) -> LarsPath:
    """Run the path on centered data until exhaustion or max_active features."""
    n, p = Xc.shape
    if max_active is None:
        max_active = p
    coef = np.zeros(p)
    active: list[int] = []
    flags: list[str] = []
    c = Xc.T @ yc
    knots = [LarsKnot(float(np.abs(c).max(initial=0.0)) / n, coef.copy(), ())]
    drop_pending = False
    for _ in range(8 * p + 8):
        c = Xc.T @ (yc - Xc @ coef)
        C = float(np.abs(c).max(initial=0.0))
        if C / n <= _EPS:
            break
        if not drop_pending:
            inactive = [j for j in range(p) if j not in active]
            if not inactive:
                pass
            else:
                j_new = max(inactive, key=lambda j: (abs(c[j]), -j))  # lowest index on ties
                if len(active) >= max_active:
                    break
                active.append(j_new)
        drop_pending = False
        signs = np.sign(c[active])
        signs[signs == 0] = 1.0
        Xa = Xc[:, active] * signs
        G = Xa.T @ Xa
        try:
            w_raw = np.linalg.solve(G, np.ones(len(active)))
        except np.linalg.LinAlgError:
            flags.append("singular_active_set")
            break
        denom = float(np.ones(len(active)) @ w_raw)
        if denom <= 0:
            flags.append("singular_active_set")
            break
        A = 1.0 / np.sqrt(denom)
        w = A * w_raw
        u = Xa @ w
        a = Xc.T @ u
        if len(active) == p:
            gamma = C / A
        else:
            candidates = [C / A]
            for j in range(p):
                if j in active:
                    continue
                for num, den in ((C - c[j], A - a[j]), (C + c[j], A + a[j])):
                    if den > _EPS and num > _EPS:
                        candidates.append(num / den)
            gamma = min(candidates)
        direction = np.zeros(p)
        direction[active] = signs * w
        drop_j = None
        if lasso_mod:
            for pos, j in enumerate(active):
                d = signs[pos] * w[pos]
                if coef[j] != 0.0 and d != 0.0:
                    cross = -coef[j] / d
                    if _EPS < cross < gamma - _EPS:
                        gamma, drop_j = cross, j
        coef = coef + gamma * direction
        if drop_j is not None:
            coef[drop_j] = 0.0
            active.remove(drop_j)
            drop_pending = True
        c_after = Xc.T @ (yc - Xc @ coef)
        knots.append(
            LarsKnot(float(np.abs(c_after).max(initial=0.0)) / n, coef.copy(), tuple(active))
        )
        if len(active) == p and drop_j is None:
            break
    return LarsPath(knots, tuple(flags))


def _center(X: np.ndarray, y: np.ndarray):
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    return X - x_mean, y - y_mean, x_mean, y_mean


@register("lars", {"n_nonzero_coefs": RULE_POSITIVE_INT})
def fit_lars(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> LinearModel:
    k = spec.get("n_nonzero_coefs", min(X.shape[1], 500))
    Xc, yc, x_mean, y_mean = _center(X, y)
    path = lars_path(Xc, yc, lasso_mod=False, max_active=min(k, X.shape[1]))
    coef = path.knots[-1].coef
    intercept = float(y_mean - x_mean @ coef)
    return LinearModel("lars", intercept, coef, iterations=len(path.knots) - 1,
                       flags=path.flags)


@register("lasso_lars", {"alpha": RULE_NON_NEGATIVE})
def fit_lasso_lars(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> LinearModel:
    """Lasso solution at penalty alpha read off the LARS path."""
    alpha = spec.get("alpha", 0.01)
    Xc, yc, x_mean, y_mean = _center(X, y)
    path = lars_path(Xc, yc, lasso_mod=True)
    coef = _coef_at_penalty(path, alpha, X.shape[1])
    intercept = float(y_mean - x_mean @ coef)
    return LinearModel("lasso_lars", intercept, coef, iterations=len(path.knots) - 1,
                       flags=path.flags)


def _coef_at_penalty(path: LarsPath, alpha: float, p: int) -> np.ndarray:
    knots = path.knots
    if alpha >= knots[0].lam or len(knots) == 1:
        return np.zeros(p)
    for prev, cur in zip(knots, knots[1:]):
        if cur.lam <= alpha:
            span = prev.lam - cur.lam
            t = 1.0 if span <= 0 else (prev.lam - alpha) / span
            return prev.coef + t * (cur.coef - prev.coef)
    return knots[-1].coef.copy()

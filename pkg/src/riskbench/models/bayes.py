"""Linear regression with normal likelihood and a normal prior on the
weights, fitted by evidence (marginal likelihood) maximization.

One update recomputes the weight posterior under the current precisions,
then re-estimates the weight precision and the noise precision from the
effective number of well-determined parameters. The log marginal
likelihood is tracked per iteration and must not decrease (beyond a tiny
numerical slack).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .base import check_predict_X, ModelSpec, register, RULE_POSITIVE, RULE_POSITIVE_INT

_PRECISION_CAP = 1e12


@dataclass
class BayesRidgeState:
    weight_precision: float
    noise_precision: float
    mean: np.ndarray  # posterior mean of the centered-data weights
    gamma: float = 0.0  # effective number of parameters
    log_marginal: float = -np.inf
    iterations: int = 0


def _posterior(lam: float, alpha: float, eigvals, eigvecs, Xty, n: int):
    # Sigma = V diag(1/(lam + alpha*s)) V', mu = alpha * Sigma X'y
    denom = lam + alpha * eigvals
    mu = eigvecs @ ((alpha * (eigvecs.T @ Xty)) / denom)
    gamma = float((alpha * eigvals / denom).sum())
    return mu, gamma, denom


def _log_marginal(lam, alpha, mu, denom, rss, n, p):
    return 0.5 * (
        p * np.log(lam)
        + n * np.log(alpha)
        - alpha * rss
        - lam * float(mu @ mu)
        - float(np.log(denom).sum())
        - n * np.log(2 * np.pi)
    )


def bayesian_ridge_update(state: BayesRidgeState, X, y) -> BayesRidgeState:
    """One evidence-maximization iteration on centered copies of (X, y)."""
    if state.weight_precision <= 0 or state.noise_precision <= 0:
        raise ValidationError("precisions must be initialized > 0")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    n, p = Xc.shape
    try:
        eigvals, eigvecs = np.linalg.eigh(Xc.T @ Xc)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"eigendecomposition failed at iteration {state.iterations}: {exc}")
    eigvals = np.clip(eigvals, 0.0, None)
    Xty = Xc.T @ yc

    mu, gamma, denom = _posterior(state.weight_precision, state.noise_precision,
                                  eigvals, eigvecs, Xty, n)
    mu_sq = float(mu @ mu)
    resid = yc - Xc @ mu
    rss = float(resid @ resid)
    lam_new = min(gamma / mu_sq, _PRECISION_CAP) if mu_sq > 1e-300 else _PRECISION_CAP
    alpha_new = min(max(n - gamma, 1e-10) / rss, _PRECISION_CAP) if rss > 1e-300 else _PRECISION_CAP
    mu_new, gamma_new, denom_new = _posterior(lam_new, alpha_new, eigvals, eigvecs, Xty, n)
    rss_new = float((yc - Xc @ mu_new) ** 2 @ np.ones(n))
    log_ml = _log_marginal(lam_new, alpha_new, mu_new, denom_new, rss_new, n, p)
    return BayesRidgeState(
        weight_precision=lam_new,
        noise_precision=alpha_new,
        mean=mu_new,
        gamma=gamma_new,
        log_marginal=log_ml,
        iterations=state.iterations + 1,
    )


@dataclass
class BayesianRidgeModel:
    family: str
    intercept: float
    coef: np.ndarray
    weight_precision: float
    noise_precision: float
    log_marginal_history: tuple[float, ...] = ()
    iterations: int = 0
    converged: bool = True

    def predict(self, X) -> np.ndarray:
        X = check_predict_X(X, len(self.coef))
        return X @ self.coef + self.intercept

    def feature_importance(self) -> np.ndarray:
        return np.abs(self.coef)


@register("bayesian_ridge", {"max_iter": RULE_POSITIVE_INT, "tol": RULE_POSITIVE})
def fit_bayesian_ridge(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> BayesianRidgeModel:
    max_iter = spec.get("max_iter", 300)
    tol = spec.get("tol", 1e-8)
    var_y = float(y.var())
    state = BayesRidgeState(
        weight_precision=1.0,
        noise_precision=1.0 / var_y if var_y > 0 else 1.0,
        mean=np.zeros(X.shape[1]),
    )
    history: list[float] = []
    converged = False
    for _ in range(max_iter):
        prev = state
        state = bayesian_ridge_update(state, X, y)
        history.append(state.log_marginal)
        rel_lam = abs(state.weight_precision - prev.weight_precision) / prev.weight_precision
        rel_alpha = abs(state.noise_precision - prev.noise_precision) / prev.noise_precision
        if max(rel_lam, rel_alpha) < tol:
            converged = True
            break
    intercept = float(y.mean() - X.mean(axis=0) @ state.mean)
    return BayesianRidgeModel(
        "bayesian_ridge",
        intercept,
        state.mean,
        state.weight_precision,
        state.noise_precision,
        tuple(history),
        state.iterations,
        converged,
    )

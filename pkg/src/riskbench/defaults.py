"""Fixed manifest of report families, display names and tuning grids.

Grid sizes trade tuning quality against wall time: cheap linear
families get real alpha grids, expensive tree ensembles get pinned
sensible settings. Override per run via the CLI --config file.
"""

from __future__ import annotations

from .models import ModelSpec

# The 18 families every leaderboard reports, in canonical order.
REPORT_FAMILIES = (
    "ols",
    "ridge",
    "lasso",
    "elastic_net",
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

DISPLAY_NAMES = {
    "ols": "Linear Regression",
    "ridge": "Ridge Regression",
    "lasso": "Lasso Regression",
    "elastic_net": "Elastic Net",
    "lars": "Least Angle Regression",
    "lasso_lars": "Lasso Least Angle Regression",
    "omp": "Orthogonal Matching Pursuit",
    "bayesian_ridge": "Bayesian Ridge",
    "huber": "Huber Regressor",
    "passive_aggressive": "Passive Aggressive Regressor",
    "knn": "KNN Regressor",
    "decision_tree": "Decision Tree",
    "random_forest": "Random Forest Regressor",
    "extra_trees": "Extra Trees Regressor",
    "adaboost": "AdaBoost Regressor",
    "gbm_depthwise": "Gradient Boosting (depthwise)",
    "gbm_leafwise": "Gradient Boosting (leafwise histogram)",
    "gbm_oblivious": "Gradient Boosting (oblivious)",
    "dummy": "Dummy Regressor",
}

ALPHA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)


def default_grid(family: str, n_features: int, seed: int = 0) -> list[ModelSpec]:
    """Candidate specs tuned by cross-validation for one family."""
    mk = lambda **hp: ModelSpec(family, hp, seed)  # noqa: E731
    if family in ("ols", "bayesian_ridge", "dummy"):
        return [mk()]
    if family in ("ridge", "lasso", "lasso_lars"):
        return [mk(alpha=a) for a in ALPHA_GRID]
    if family == "elastic_net":
        return [mk(alpha=a, l1_ratio=r) for a in ALPHA_GRID for r in (0.2, 0.5, 0.8)]
    if family == "lars":
        ks = sorted({min(k, n_features) for k in (2, 5, 10, 25)})
        return [mk(n_nonzero_coefs=k) for k in ks]
    if family == "omp":
        ks = sorted({min(k, n_features) for k in (1, 2, 5, 10, 20)})
        return [mk(n_nonzero_coefs=k) for k in ks]
    if family == "huber":
        return [mk(delta=d) for d in (1.0, 1.35, 2.0)]
    if family == "passive_aggressive":
        return [mk(C=c) for c in (0.01, 0.1, 1.0)]
    if family == "knn":
        return [mk(k=k) for k in (3, 5, 10, 25)]
    if family == "decision_tree":
        return [mk(max_depth=d) for d in (2, 4, 6)]
    if family == "random_forest":
        return [mk(n_trees=40, max_depth=6, min_samples_leaf=3)]
    if family == "extra_trees":
        return [mk(n_trees=40, max_depth=6, min_samples_leaf=3)]
    if family == "adaboost":
        return [mk(n_rounds=30, max_depth=3)]
    if family == "gbm_depthwise":
        return [mk(n_rounds=100, learning_rate=0.1, max_depth=2)]
    if family == "gbm_leafwise":
        return [mk(n_rounds=120, learning_rate=0.1, max_leaves=15)]
    if family == "gbm_oblivious":
        return [mk(n_rounds=120, learning_rate=0.1, max_depth=4)]
    raise KeyError(family)


def default_grids(n_features: int, seed: int = 0,
                  families=REPORT_FAMILIES) -> dict[str, list[ModelSpec]]:
    return {f: default_grid(f, n_features, seed) for f in families}

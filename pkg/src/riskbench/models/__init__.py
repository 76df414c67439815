"""Regression model zoo behind one fit/predict contract.

Eighteen report families (plus plain least-angle regression) share the
ModelSpec/fit/predict surface; fits are deterministic functions of
(spec, data) and fitted models are immutable and serializable.
"""

from .base import FAMILIES, ModelSpec, DummyModel, LinearModel, fit, predict, validate_spec
from . import linear, lars, omp, bayes, neighbors, tree, ensemble, boosting  # noqa: F401  (registration)
from .linear import soft_threshold, lasso_deactivation_alpha, elastic_net_objective, lasso_kkt_violation
from .lars import lars_path
from .omp import omp_path
from .bayes import BayesRidgeState, bayesian_ridge_update
from .tree import cart_best_split
from .boosting import gbm_round, GBMModel, ObliviousTree
from .serialize import model_to_doc, model_from_doc, model_to_json, model_from_json

__all__ = [
    "FAMILIES",
    "ModelSpec",
    "DummyModel",
    "LinearModel",
    "fit",
    "predict",
    "validate_spec",
    "soft_threshold",
    "lasso_deactivation_alpha",
    "elastic_net_objective",
    "lasso_kkt_violation",
    "lars_path",
    "omp_path",
    "BayesRidgeState",
    "bayesian_ridge_update",
    "cart_best_split",
    "gbm_round",
    "GBMModel",
    "ObliviousTree",
    "model_to_doc",
    "model_from_doc",
    "model_to_json",
    "model_from_json",
]


def feature_importance(model):
    """|coefficient| for linear models, total split gain for trees.

    Raises AttributeError-free ValidationError for families without a
    defined importance (dummy, knn).
    """
    from ..errors import ValidationError

    fn = getattr(model, "feature_importance", None)
    if fn is None:
        raise ValidationError(f"family {model.family!r} does not expose feature importance")
    return fn()

"""Tree ensembles: bagged forests, randomized-threshold forests, and
adaptive boosting for regression.

Forest predictions are the mean over trees. The boosting variant
reweights samples by per-round relative absolute error and predicts with
the weighted median of the weak learners, so single bad rounds cannot
drag the prediction arbitrarily.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import check_predict_X, ModelSpec, register, RULE_POSITIVE_INT, RULE_FRACTION
from .tree import TreeNode, build_tree, predict_tree, split_gain_importance

_FOREST_PARAMS = {
    "n_trees": RULE_POSITIVE_INT,
    "max_depth": RULE_POSITIVE_INT,
    "min_samples_leaf": RULE_POSITIVE_INT,
    "max_features": (lambda v: v is None or (isinstance(v, int) and v >= 1)
                     or (isinstance(v, float) and 0 < v <= 1) or v == "sqrt",
                     "must be None, 'sqrt', an int >= 1 or a fraction in (0,1]"),
    "bootstrap": (lambda v: isinstance(v, bool), "must be a boolean"),
}


def _resolve_max_features(setting, p: int) -> int | None:
    if setting is None:
        return None
    if setting == "sqrt":
        return max(1, int(np.sqrt(p)))
    if isinstance(setting, float) and not isinstance(setting, bool):
        return max(1, int(round(setting * p)))
    return min(int(setting), p)


@dataclass
class ForestModel:
    family: str
    trees: list[TreeNode]
    n_features: int
    params: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        X = check_predict_X(X, self.n_features)
        acc = np.zeros(X.shape[0])
        for t in self.trees:
            acc += predict_tree(t, X)
        return acc / len(self.trees)

    def feature_importance(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        for t in self.trees:
            imp += split_gain_importance(t, self.n_features)
        return imp


def _fit_forest(family: str, spec: ModelSpec, X, y, bootstrap_default: bool,
                random_thresholds: bool) -> ForestModel:
    n, p = X.shape
    n_trees = spec.get("n_trees", 100)
    max_depth = spec.get("max_depth", 8)
    min_leaf = spec.get("min_samples_leaf", 3)
    max_features = _resolve_max_features(spec.get("max_features", "sqrt"), p)
    bootstrap = spec.get("bootstrap", bootstrap_default)
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 11, t]))
        if bootstrap:
            rows = rng.integers(0, n, size=n)
            Xt, yt = X[rows], y[rows]
        else:
            Xt, yt = X, y
        trees.append(
            build_tree(Xt, yt, max_depth=max_depth, min_samples_leaf=min_leaf,
                       max_features=max_features, rng=rng,
                       random_thresholds=random_thresholds)
        )
    return ForestModel(family, trees, p, {
        "n_trees": n_trees, "max_depth": max_depth, "min_samples_leaf": min_leaf,
        "max_features": spec.get("max_features", "sqrt"), "bootstrap": bootstrap,
    })


@register("random_forest", _FOREST_PARAMS)
def fit_random_forest(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> ForestModel:
    return _fit_forest("random_forest", spec, X, y, bootstrap_default=True,
                       random_thresholds=False)


@register("extra_trees", _FOREST_PARAMS)
def fit_extra_trees(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> ForestModel:
    # no resampling: always the full data, randomness lives in the splits
    return _fit_forest("extra_trees", spec, X, y, bootstrap_default=False,
                       random_thresholds=True)


@dataclass
class AdaBoostR2Model:
    family: str
    trees: list[TreeNode]
    log_weights: np.ndarray  # ln(1/beta_t) per round
    n_features: int
    sample_weight_history: tuple[np.ndarray, ...] = ()
    params: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        X = check_predict_X(X, self.n_features)
        preds = np.stack([predict_tree(t, X) for t in self.trees])  # (T, n)
        order = np.argsort(preds, axis=0, kind="stable")
        w = self.log_weights[order]
        cum = np.cumsum(w, axis=0)
        half = 0.5 * w.sum(axis=0)
        pick = (cum >= half[None, :]).argmax(axis=0)
        cols = np.arange(X.shape[0])
        return preds[order[pick, cols], cols]

    def feature_importance(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        for t, lw in zip(self.trees, self.log_weights):
            imp += lw * split_gain_importance(t, self.n_features)
        return imp


@register("adaboost", {"n_rounds": RULE_POSITIVE_INT, "max_depth": RULE_POSITIVE_INT,
                       "min_samples_leaf": RULE_POSITIVE_INT})
def fit_adaboost(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> AdaBoostR2Model:
    """Boost by weighted resampling; round weights shrink with average
    relative error and the sample weights stay a probability simplex."""
    n, p = X.shape
    n_rounds = spec.get("n_rounds", 50)
    max_depth = spec.get("max_depth", 3)
    min_leaf = spec.get("min_samples_leaf", 1)
    w = np.full(n, 1.0 / n)
    trees: list[TreeNode] = []
    log_weights: list[float] = []
    weight_history: list[np.ndarray] = []
    for t in range(n_rounds):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 13, t]))
        rows = rng.choice(n, size=n, replace=True, p=w)
        tree = build_tree(X[rows], y[rows], max_depth=max_depth, min_samples_leaf=min_leaf)
        err = np.abs(predict_tree(tree, X) - y)
        err_max = err.max()
        if err_max <= 0:
            trees.append(tree)
            log_weights.append(np.log(1.0 / 1e-10))
            weight_history.append(w.copy())
            break
        loss = err / err_max
        avg_loss = float(w @ loss)
        if avg_loss >= 0.5:
            if not trees:  # keep one learner so the model is usable
                trees.append(tree)
                log_weights.append(np.log(1.0 / max(avg_loss / (1 - avg_loss + 1e-12), 1e-10)))
                weight_history.append(w.copy())
            break
        beta = avg_loss / (1.0 - avg_loss)
        trees.append(tree)
        log_weights.append(float(np.log(1.0 / beta)))
        w = w * beta ** (1.0 - loss)
        w = w / w.sum()
        weight_history.append(w.copy())
    return AdaBoostR2Model("adaboost", trees, np.array(log_weights), p,
                           tuple(weight_history),
                           {"n_rounds": n_rounds, "max_depth": max_depth,
                            "min_samples_leaf": min_leaf})

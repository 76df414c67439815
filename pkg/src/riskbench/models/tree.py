"""Regression tree grown by exact variance-reduction splits.

Split gain is the sum-of-squared-error reduction
n*Var(parent) - [n_L*Var(L) + n_R*Var(R)], computed from prefix sums.
Ties break to the lowest feature index, then the lowest threshold, so
fits are deterministic. Thresholds are midpoints between consecutive
distinct values; samples with x <= threshold go left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .base import ModelSpec, check_predict_X, register, RULE_POSITIVE_INT

_GAIN_EPS = 1e-12


@dataclass
class TreeNode:
    value: float
    n_samples: int
    feature: int | None = None
    threshold: float | None = None
    gain: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _best_split_on(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best (gain, threshold) for one feature column, or None."""
    n = len(y)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    csum = np.cumsum(ys)
    total = csum[-1]
    nl = np.arange(1, n)
    valid = (xs[:-1] != xs[1:]) & (nl >= min_leaf) & ((n - nl) >= min_leaf)
    if not valid.any():
        return None
    sl = csum[:-1]
    sr = total - sl
    gain = sl * sl / nl + sr * sr / (n - nl) - total * total / n
    gain[~valid] = -np.inf
    j = int(np.argmax(gain))  # first max -> lowest threshold
    return float(gain[j]), float((xs[j] + xs[j + 1]) / 2.0)


def best_split(X: np.ndarray, y: np.ndarray, min_samples_leaf: int,
               feature_ids: np.ndarray | None = None):
    """Best (feature, threshold, gain) over the given features, or None.

    Returns None when y is constant, no threshold separates the data, or
    the leaf-size constraint cannot be met.
    """
    n = len(y)
    if n < 2 * min_samples_leaf:
        return None
    if feature_ids is None:
        feature_ids = np.arange(X.shape[1])
    sse_parent = float(((y - y.mean()) ** 2).sum())
    best = None
    for f in feature_ids:
        found = _best_split_on(X[:, f], y, min_samples_leaf)
        if found is None:
            continue
        gain, thr = found
        if best is None or gain > best[2]:
            best = (int(f), thr, gain)
    if best is None or best[2] <= _GAIN_EPS * max(1.0, sse_parent):
        return None
    return best


def cart_best_split(X, y, min_samples_leaf: int = 1):
    """Public split search over all features; see best_split."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if min_samples_leaf < 1:
        raise ValidationError("min_samples_leaf must be >= 1")
    return best_split(X, y, min_samples_leaf)


def build_tree(X: np.ndarray, y: np.ndarray, max_depth: int, min_samples_leaf: int,
               max_features: int | None = None,
               rng: np.random.Generator | None = None,
               random_thresholds: bool = False) -> TreeNode:
    """Grow a tree depth-first (left branch first).

    max_features draws a feature subset per split (random forest style);
    random_thresholds draws one uniform threshold per candidate feature
    (extra trees style) instead of scanning all split points.
    """
    p = X.shape[1]

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        ysub = y[idx]
        node = TreeNode(value=float(ysub.mean()), n_samples=len(idx))
        if depth >= max_depth or len(idx) < 2 * min_samples_leaf:
            return node
        if max_features is not None and max_features < p:
            feature_ids = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            feature_ids = np.arange(p)
        if random_thresholds:
            found = _random_split(X[idx], ysub, min_samples_leaf, feature_ids, rng)
        else:
            found = best_split(X[idx], ysub, min_samples_leaf, feature_ids)
        if found is None:
            return node
        f, thr, gain = found
        go_left = X[idx, f] <= thr
        node.feature, node.threshold, node.gain = f, thr, gain
        node.left = grow(idx[go_left], depth + 1)
        node.right = grow(idx[~go_left], depth + 1)
        return node

    return grow(np.arange(X.shape[0]), 0)


def _random_split(Xsub: np.ndarray, y: np.ndarray, min_leaf: int,
                  feature_ids: np.ndarray, rng: np.random.Generator):
    n = len(y)
    total = y.sum()
    sse_parent = float(((y - y.mean()) ** 2).sum())
    best = None
    for f in feature_ids:
        x = Xsub[:, f]
        lo, hi = x.min(), x.max()
        if lo == hi:
            continue
        thr = float(rng.uniform(lo, hi))
        go_left = x <= thr
        nl = int(go_left.sum())
        if nl < min_leaf or n - nl < min_leaf:
            continue
        sl = y[go_left].sum()
        sr = total - sl
        gain = sl * sl / nl + sr * sr / (n - nl) - total * total / n
        if best is None or gain > best[2]:
            best = (int(f), thr, gain)
    if best is None or best[2] <= _GAIN_EPS * max(1.0, sse_parent):
        return None
    return best


def predict_tree(node: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])

    def walk(nd: TreeNode, idx: np.ndarray):
        if nd.is_leaf or len(idx) == 0:
            out[idx] = nd.value
            return
        go_left = X[idx, nd.feature] <= nd.threshold
        walk(nd.left, idx[go_left])
        walk(nd.right, idx[~go_left])

    walk(node, np.arange(X.shape[0]))
    return out


def split_gain_importance(node: TreeNode, n_features: int) -> np.ndarray:
    """Total SSE-reduction per feature over all internal nodes."""
    imp = np.zeros(n_features)

    def walk(nd: TreeNode):
        if nd.is_leaf:
            return
        imp[nd.feature] += nd.gain
        walk(nd.left)
        walk(nd.right)

    walk(node)
    return imp


def tree_to_doc(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"value": node.value, "n": node.n_samples}
    return {
        "value": node.value,
        "n": node.n_samples,
        "feature": node.feature,
        "threshold": node.threshold,
        "gain": node.gain,
        "left": tree_to_doc(node.left),
        "right": tree_to_doc(node.right),
    }


def tree_from_doc(doc: dict) -> TreeNode:
    node = TreeNode(value=doc["value"], n_samples=doc["n"])
    if "feature" in doc:
        node.feature = doc["feature"]
        node.threshold = doc["threshold"]
        node.gain = doc["gain"]
        node.left = tree_from_doc(doc["left"])
        node.right = tree_from_doc(doc["right"])
    return node


@dataclass
class DecisionTreeModel:
    family: str
    root: TreeNode
    n_features: int
    params: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        X = check_predict_X(X, self.n_features)
        return predict_tree(self.root, X)

    def feature_importance(self) -> np.ndarray:
        return split_gain_importance(self.root, self.n_features)


@register("decision_tree", {"max_depth": RULE_POSITIVE_INT, "min_samples_leaf": RULE_POSITIVE_INT})
def fit_decision_tree(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> DecisionTreeModel:
    max_depth = spec.get("max_depth", 6)
    min_leaf = spec.get("min_samples_leaf", 5)
    root = build_tree(X, y, max_depth=max_depth, min_samples_leaf=min_leaf)
    return DecisionTreeModel(
        "decision_tree", root, X.shape[1],
        {"max_depth": max_depth, "min_samples_leaf": min_leaf},
    )

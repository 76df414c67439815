"""Gradient boosting for squared loss with three tree-growth modes.

Every round fits one regression tree to the current residuals (the
negative gradient of squared loss) and adds learning_rate times its
prediction. Leaf values are residual means, so training MSE cannot
increase; a safety check still drops any round that would (then the
round is a recorded no-op).

Growth modes:
  depthwise   exact best-first-by-depth CART, the classic formulation
  leafwise    histogram-binned features, splitting the best leaf first
              until a leaf budget is reached
  oblivious   one shared (feature, threshold) condition per depth level,
              giving a perfectly balanced tree; the pair with the lowest
              total loss across the level's nodes is selected

Histogram codes use searchsorted(edges, x, side="left"), so the bin
predicate code <= t is exactly x <= edges[t] on raw values. Split
search is one flattened bincount over all features at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ValidationError
from .base import check_predict_X, ModelSpec, register, RULE_POSITIVE_INT, RULE_RATE
from .tree import TreeNode, build_tree, predict_tree, split_gain_importance

_GAIN_EPS = 1e-12

MODES = ("depthwise", "leafwise", "oblivious")


@dataclass
class BinnedDesign:
    edges: list[np.ndarray]  # per-feature ascending thresholds
    codes: np.ndarray  # (n, p) int codes, row-major flattenable
    width: int  # uniform code width = max bins over features

    @property
    def n_features(self) -> int:
        return self.codes.shape[1]


def bin_design(X: np.ndarray, n_bins: int) -> BinnedDesign:
    """Quantile-bin every feature; constant features get zero thresholds."""
    n, p = X.shape
    qs = np.arange(1, n_bins) / n_bins
    edges: list[np.ndarray] = []
    for f in range(p):
        col = X[:, f]
        if n == 0 or col.min() == col.max():
            edges.append(np.empty(0))
            continue
        e = np.unique(np.quantile(col, qs))
        edges.append(e[e < col.max()])  # a top edge would send nothing right
    width = max((len(e) + 1 for e in edges), default=1)
    codes = np.empty((n, p), dtype=np.int64)
    for f, e in enumerate(edges):
        codes[:, f] = np.searchsorted(e, X[:, f], side="left") if len(e) else 0
    return BinnedDesign(edges, codes, width)


def _gain_table(cnt: np.ndarray, sm: np.ndarray, min_leaf: int,
                n_thresholds: np.ndarray) -> np.ndarray:
    """(p, width-1) split gains from per-feature histograms; -inf if invalid."""
    left_c = cnt.cumsum(axis=1)[:, :-1]
    left_s = sm.cumsum(axis=1)[:, :-1]
    tot_c = cnt.sum(axis=1, keepdims=True)
    tot_s = sm.sum(axis=1, keepdims=True)
    right_c = tot_c - left_c
    right_s = tot_s - left_s
    valid = (left_c >= min_leaf) & (right_c >= min_leaf)
    valid &= np.arange(left_c.shape[1])[None, :] < n_thresholds[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = (left_s ** 2 / np.maximum(left_c, 1)
                + right_s ** 2 / np.maximum(right_c, 1)
                - np.where(tot_c > 0, tot_s ** 2 / np.maximum(tot_c, 1), 0.0))
    gain[~valid] = -np.inf
    return gain


def _leaf_best_split(design: BinnedDesign, resid: np.ndarray, idx: np.ndarray,
                     min_leaf: int):
    """Best (gain, feature, threshold_value, code_t) for one leaf, or None."""
    n = len(idx)
    if n < 2 * min_leaf:
        return None
    p, width = design.n_features, design.width
    flat = (design.codes[idx] + np.arange(p) * width).ravel()
    cnt = np.bincount(flat, minlength=p * width).reshape(p, width).astype(np.float64)
    sm = np.bincount(flat, weights=np.repeat(resid[idx], p), minlength=p * width).reshape(p, width)
    if width < 2:
        return None
    n_thresholds = np.array([len(e) for e in design.edges])
    gain = _gain_table(cnt, sm, min_leaf, n_thresholds)
    pos = int(np.argmax(gain))  # row-major: lowest feature, then lowest bin, wins ties
    best = gain.ravel()[pos]
    scale = max(1.0, float(np.abs(resid[idx]).max()) ** 2 * n)
    if not np.isfinite(best) or best <= _GAIN_EPS * scale:
        return None
    f, t = divmod(pos, width - 1)
    return float(best), int(f), float(design.edges[f][t]), int(t)


def build_leafwise_tree(X, resid, design: BinnedDesign, max_leaves, min_leaf) -> TreeNode:
    """Grow by repeatedly splitting the leaf with the largest gain."""
    root = TreeNode(value=float(resid.mean()), n_samples=len(resid))
    by_id = {0: (root, np.arange(len(resid)))}
    candidates: dict[int, tuple] = {}
    found = _leaf_best_split(design, resid, by_id[0][1], min_leaf)
    if found:
        candidates[0] = found
    next_id = 1
    n_leaves = 1
    while n_leaves < max_leaves and candidates:
        leaf_id = max(candidates, key=lambda i: (candidates[i][0], -i))
        gain, f, thr, _ = candidates.pop(leaf_id)
        node, idx = by_id.pop(leaf_id)
        go_left = X[idx, f] <= thr
        node.feature, node.threshold, node.gain = f, thr, gain
        for side_idx in (idx[go_left], idx[~go_left]):
            child = TreeNode(value=float(resid[side_idx].mean()), n_samples=len(side_idx))
            if node.left is None:
                node.left = child
            else:
                node.right = child
            by_id[next_id] = (child, side_idx)
            found = _leaf_best_split(design, resid, side_idx, min_leaf)
            if found:
                candidates[next_id] = found
            next_id += 1
        n_leaves += 1
    return root


@dataclass
class ObliviousTree:
    """One (feature, threshold) per depth level; 2^depth leaf values."""

    levels: tuple[tuple[int, float], ...]
    level_gains: tuple[float, ...]
    leaf_values: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        slot = np.zeros(X.shape[0], dtype=np.int64)
        for f, thr in self.levels:
            slot = slot * 2 + (X[:, f] > thr)
        return self.leaf_values[slot]

    def condition_pairs(self) -> set[tuple[int, float]]:
        return set(self.levels)


def build_oblivious_tree(X, resid, design: BinnedDesign, max_depth) -> ObliviousTree:
    n = len(resid)
    p, width = design.n_features, design.width
    n_thresholds = np.array([len(e) for e in design.edges])
    slot = np.zeros(n, dtype=np.int64)
    levels: list[tuple[int, float]] = []
    gains: list[float] = []
    scale = max(1.0, float(np.abs(resid).max(initial=0.0)) ** 2 * n)
    for depth in range(max_depth):
        if width < 2:
            break
        n_slots = 1 << depth
        flat = (slot[:, None] * (p * width) + design.codes + np.arange(p) * width).ravel()
        cnt = np.bincount(flat, minlength=n_slots * p * width)
        sm = np.bincount(flat, weights=np.repeat(resid, p), minlength=n_slots * p * width)
        cnt = cnt.reshape(n_slots, p, width).astype(np.float64)
        sm = sm.reshape(n_slots, p, width)
        left_c = cnt.cumsum(axis=2)[:, :, :-1]
        left_s = sm.cumsum(axis=2)[:, :, :-1]
        tot_c = cnt.sum(axis=2, keepdims=True)
        tot_s = sm.sum(axis=2, keepdims=True)
        right_c = tot_c - left_c
        right_s = tot_s - left_s
        splittable = (left_c > 0) & (right_c > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            per_slot = np.where(
                splittable,
                left_s ** 2 / np.maximum(left_c, 1)
                + right_s ** 2 / np.maximum(right_c, 1)
                - np.where(tot_c > 0, tot_s ** 2 / np.maximum(tot_c, 1), 0.0),
                0.0,
            )
        total = per_slot.sum(axis=0)  # (p, width-1)
        total[np.arange(width - 1)[None, :] >= n_thresholds[:, None]] = -np.inf
        pos = int(np.argmax(total))
        best = total.ravel()[pos]
        if not np.isfinite(best) or best <= _GAIN_EPS * scale:
            break
        f, t = divmod(pos, width - 1)
        levels.append((int(f), float(design.edges[f][t])))
        gains.append(float(best))
        slot = slot * 2 + (design.codes[:, f] > t)
    n_leaves = 1 << len(levels)
    cnt = np.bincount(slot, minlength=n_leaves).astype(float)
    sm = np.bincount(slot, weights=resid, minlength=n_leaves)
    # fill empty leaves from their nearest non-empty ancestor mean
    values = np.zeros(n_leaves)
    overall = float(resid.mean()) if n else 0.0
    level_cnt, level_sum = cnt, sm
    fills = [np.where(level_cnt > 0, level_sum / np.maximum(level_cnt, 1), np.nan)]
    while len(level_cnt) > 1:
        level_cnt = level_cnt.reshape(-1, 2).sum(axis=1)
        level_sum = level_sum.reshape(-1, 2).sum(axis=1)
        fills.append(np.where(level_cnt > 0, level_sum / np.maximum(level_cnt, 1), np.nan))
    for leaf in range(n_leaves):
        slot_at = leaf
        for depth_fill in fills:
            v = depth_fill[slot_at]
            if not np.isnan(v):
                values[leaf] = v
                break
            slot_at //= 2
        else:
            values[leaf] = overall
    return ObliviousTree(tuple(levels), tuple(gains), values)


@dataclass
class GBMModel:
    family: str
    mode: str
    base: float
    trees: list
    tree_rates: list[float]
    n_features: int
    params: dict = field(default_factory=dict)
    train_mse_history: tuple[float, ...] = ()
    rounds_skipped: int = 0

    def predict(self, X) -> np.ndarray:
        X = check_predict_X(X, self.n_features)
        out = np.full(X.shape[0], self.base)
        for tree, rate in zip(self.trees, self.tree_rates):
            if isinstance(tree, ObliviousTree):
                out += rate * tree.predict(X)
            else:
                out += rate * predict_tree(tree, X)
        return out

    def feature_importance(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        for tree in self.trees:
            if isinstance(tree, ObliviousTree):
                for (f, _), g in zip(tree.levels, tree.level_gains):
                    imp[f] += g
            else:
                imp += split_gain_importance(tree, self.n_features)
        return imp


def _fit_round_tree(model: GBMModel, X, resid, design: BinnedDesign | None):
    p = model.params
    if model.mode == "depthwise":
        return build_tree(X, resid, max_depth=p["max_depth"],
                          min_samples_leaf=p["min_samples_leaf"])
    if design is None:
        design = bin_design(X, p["n_bins"])
    if model.mode == "leafwise":
        return build_leafwise_tree(X, resid, design, max_leaves=p["max_leaves"],
                                   min_leaf=p["min_samples_leaf"])
    return build_oblivious_tree(X, resid, design, max_depth=p["max_depth"])


def gbm_round(model: GBMModel, X, y, learning_rate: float | None = None,
              _design: BinnedDesign | None = None,
              _current: np.ndarray | None = None) -> GBMModel:
    """One boosting round on residuals; returns a new ensemble.

    If the fitted tree would raise training MSE (a numerical pathology),
    the round is a no-op apart from bookkeeping.
    """
    rate = model.params["learning_rate"] if learning_rate is None else learning_rate
    if not 0 < rate <= 1:
        raise ValidationError("learning_rate must be in (0, 1]")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    current = model.predict(X) if _current is None else _current
    resid = y - current
    old_mse = float((resid ** 2).mean())
    tree = _fit_round_tree(model, X, resid, _design)
    tree_pred = tree.predict(X) if isinstance(tree, ObliviousTree) else predict_tree(tree, X)
    new_mse = float(((resid - rate * tree_pred) ** 2).mean())
    if new_mse > old_mse + 1e-15:
        return replace(model, train_mse_history=model.train_mse_history + (old_mse,),
                       rounds_skipped=model.rounds_skipped + 1)
    return replace(
        model,
        trees=model.trees + [tree],
        tree_rates=model.tree_rates + [rate],
        train_mse_history=model.train_mse_history + (new_mse,),
    )


_GBM_PARAMS = {
    "n_rounds": (lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 0,
                 "must be an integer >= 0"),
    "learning_rate": RULE_RATE,
    "max_depth": RULE_POSITIVE_INT,
    "max_leaves": (lambda v: isinstance(v, int) and v >= 2, "must be an integer >= 2"),
    "min_samples_leaf": RULE_POSITIVE_INT,
    "n_bins": (lambda v: isinstance(v, int) and v >= 2, "must be an integer >= 2"),
}


def _fit_gbm(mode: str, family: str, spec: ModelSpec, X, y) -> GBMModel:
    params = {
        "n_rounds": spec.get("n_rounds", 150),
        "learning_rate": spec.get("learning_rate", 0.1),
        "max_depth": spec.get("max_depth", 3 if mode == "depthwise" else 4),
        "max_leaves": spec.get("max_leaves", 15),
        "min_samples_leaf": spec.get("min_samples_leaf", 5),
        "n_bins": spec.get("n_bins", 32),
    }
    model = GBMModel(family, mode, float(y.mean()), [], [], X.shape[1], params)
    design = None if mode == "depthwise" else bin_design(X, params["n_bins"])
    current = np.full(len(y), model.base)
    for _ in range(params["n_rounds"]):
        before = len(model.trees)
        model = gbm_round(model, X, y, _design=design, _current=current)
        if len(model.trees) > before:
            tree = model.trees[-1]
            pred = tree.predict(X) if isinstance(tree, ObliviousTree) else predict_tree(tree, X)
            current = current + model.tree_rates[-1] * pred
    return model


@register("gbm_depthwise", _GBM_PARAMS)
def fit_gbm_depthwise(spec: ModelSpec, X, y) -> GBMModel:
    return _fit_gbm("depthwise", "gbm_depthwise", spec, X, y)


@register("gbm_leafwise", _GBM_PARAMS)
def fit_gbm_leafwise(spec: ModelSpec, X, y) -> GBMModel:
    return _fit_gbm("leafwise", "gbm_leafwise", spec, X, y)


@register("gbm_oblivious", _GBM_PARAMS)
def fit_gbm_oblivious(spec: ModelSpec, X, y) -> GBMModel:
    return _fit_gbm("oblivious", "gbm_oblivious", spec, X, y)

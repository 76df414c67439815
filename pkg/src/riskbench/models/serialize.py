"""Versioned JSON round-tripping for fitted models.

Floats survive exactly (JSON emits shortest round-trip reprs), so a
loaded model predicts bit-identically. Transient fitting diagnostics
(e.g. boosting sample-weight history) are not part of the document.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import ValidationError
from .base import DummyModel, LinearModel
from .bayes import BayesianRidgeModel
from .boosting import GBMModel, ObliviousTree
from .ensemble import AdaBoostR2Model, ForestModel
from .neighbors import KNNModel
from .tree import DecisionTreeModel, tree_from_doc, tree_to_doc

FORMAT = "riskbench-model"
VERSION = 1


def _arr(a: np.ndarray) -> list:
    return np.asarray(a).tolist()


def model_to_doc(model) -> dict:
    doc = {"format": FORMAT, "version": VERSION, "family": model.family}
    if isinstance(model, LinearModel):
        doc.update(kind="linear", intercept=model.intercept, coef=_arr(model.coef),
                   iterations=model.iterations, converged=model.converged,
                   flags=list(model.flags))
    elif isinstance(model, DummyModel):
        doc.update(kind="dummy", constant=model.constant, n_features=model.n_features)
    elif isinstance(model, BayesianRidgeModel):
        doc.update(kind="bayesian_ridge", intercept=model.intercept, coef=_arr(model.coef),
                   weight_precision=model.weight_precision,
                   noise_precision=model.noise_precision,
                   log_marginal_history=list(model.log_marginal_history),
                   iterations=model.iterations, converged=model.converged)
    elif isinstance(model, KNNModel):
        doc.update(kind="knn", k=model.k, X_train=_arr(model.X_train),
                   y_train=_arr(model.y_train))
    elif isinstance(model, DecisionTreeModel):
        doc.update(kind="tree", root=tree_to_doc(model.root),
                   n_features=model.n_features, params=model.params)
    elif isinstance(model, ForestModel):
        doc.update(kind="forest", trees=[tree_to_doc(t) for t in model.trees],
                   n_features=model.n_features, params=model.params)
    elif isinstance(model, AdaBoostR2Model):
        doc.update(kind="adaboost", trees=[tree_to_doc(t) for t in model.trees],
                   log_weights=_arr(model.log_weights), n_features=model.n_features,
                   params=model.params)
    elif isinstance(model, GBMModel):
        doc.update(kind="gbm", mode=model.mode, base=model.base,
                   trees=[_gbm_tree_to_doc(t) for t in model.trees],
                   tree_rates=list(model.tree_rates), n_features=model.n_features,
                   params=model.params, train_mse_history=list(model.train_mse_history),
                   rounds_skipped=model.rounds_skipped)
    else:
        raise ValidationError(f"cannot serialize model of type {type(model).__name__}")
    return doc


def _gbm_tree_to_doc(tree) -> dict:
    if isinstance(tree, ObliviousTree):
        return {"oblivious": True, "levels": [list(l) for l in tree.levels],
                "level_gains": list(tree.level_gains),
                "leaf_values": _arr(tree.leaf_values)}
    return tree_to_doc(tree)


def _gbm_tree_from_doc(doc: dict):
    if doc.get("oblivious"):
        return ObliviousTree(tuple((int(f), float(t)) for f, t in doc["levels"]),
                             tuple(doc["level_gains"]),
                             np.array(doc["leaf_values"], dtype=np.float64))
    return tree_from_doc(doc)


def model_from_doc(doc: dict):
    if doc.get("format") != FORMAT:
        raise ValidationError("not a model document")
    if doc.get("version") != VERSION:
        raise ValidationError(f"unsupported model document version {doc.get('version')!r}")
    kind = doc["kind"]
    if kind == "linear":
        return LinearModel(doc["family"], doc["intercept"],
                           np.array(doc["coef"], dtype=np.float64),
                           doc["iterations"], doc["converged"], tuple(doc["flags"]))
    if kind == "dummy":
        return DummyModel(doc["family"], doc["constant"], doc["n_features"])
    if kind == "bayesian_ridge":
        return BayesianRidgeModel(doc["family"], doc["intercept"],
                                  np.array(doc["coef"], dtype=np.float64),
                                  doc["weight_precision"], doc["noise_precision"],
                                  tuple(doc["log_marginal_history"]),
                                  doc["iterations"], doc["converged"])
    if kind == "knn":
        return KNNModel(doc["family"], doc["k"],
                        np.array(doc["X_train"], dtype=np.float64),
                        np.array(doc["y_train"], dtype=np.float64))
    if kind == "tree":
        return DecisionTreeModel(doc["family"], tree_from_doc(doc["root"]),
                                 doc["n_features"], dict(doc["params"]))
    if kind == "forest":
        return ForestModel(doc["family"], [tree_from_doc(t) for t in doc["trees"]],
                           doc["n_features"], dict(doc["params"]))
    if kind == "adaboost":
        return AdaBoostR2Model(doc["family"], [tree_from_doc(t) for t in doc["trees"]],
                               np.array(doc["log_weights"], dtype=np.float64),
                               doc["n_features"], (), dict(doc["params"]))
    if kind == "gbm":
        return GBMModel(doc["family"], doc["mode"], doc["base"],
                        [_gbm_tree_from_doc(t) for t in doc["trees"]],
                        list(doc["tree_rates"]), doc["n_features"], dict(doc["params"]),
                        tuple(doc["train_mse_history"]), doc["rounds_skipped"])
    raise ValidationError(f"unknown model document kind {kind!r}")


def model_to_json(model) -> str:
    return json.dumps(model_to_doc(model), sort_keys=True) + "\n"


def model_from_json(text: str):
    return model_from_doc(json.loads(text))

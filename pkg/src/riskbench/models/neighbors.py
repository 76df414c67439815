"""k-nearest-neighbor regression, brute force Euclidean.

Neighbor ties at equal distance resolve to the lower training row index
(stable sort), keeping predictions deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .base import check_predict_X, ModelSpec, register, RULE_POSITIVE_INT


@dataclass
class KNNModel:
    family: str
    k: int
    X_train: np.ndarray
    y_train: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = check_predict_X(X, self.X_train.shape[1])
        out = np.empty(X.shape[0])
        train_sq = (self.X_train ** 2).sum(axis=1)
        for start in range(0, X.shape[0], 512):
            chunk = X[start:start + 512]
            d2 = (chunk ** 2).sum(axis=1)[:, None] + train_sq[None, :] - 2.0 * (chunk @ self.X_train.T)
            nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
            out[start:start + 512] = self.y_train[nearest].mean(axis=1)
        return out


@register("knn", {"k": RULE_POSITIVE_INT})
def fit_knn(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> KNNModel:
    k = spec.get("k", 5)
    if k > len(y):
        raise ValidationError(f"knn: k={k} exceeds training size {len(y)}")
    return KNNModel("knn", k, X.copy(), y.copy())

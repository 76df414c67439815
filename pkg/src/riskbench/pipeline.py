"""Composition of the preprocessing steps into one table-to-matrix path:
encode categoricals against the training target, impute numerical gaps,
standardize with training statistics.

The encoder and standardizer are fitted on training rows only; the
imputer is a pure table transform that never reads targets, so test
tables are imputed independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .preprocess import (
    ImputeConfig,
    MEstimateEncoder,
    Standardizer,
    fit_mestimate,
    fit_standardize,
    iterative_impute,
)
from .table import DataTable


@dataclass(frozen=True)
class PipelineConfig:
    smoothing_m: float = 1.0
    # chained imputation is near-converged after a couple of passes;
    # the pipeline caps rounds to keep report runs fast
    impute: ImputeConfig = field(default_factory=lambda: ImputeConfig(max_rounds=2))
    standardize: bool = True


@dataclass
class FittedPipeline:
    config: PipelineConfig
    target: str
    seed: int
    encoder: MEstimateEncoder
    standardizer: Standardizer | None
    feature_names: list[str]

    def transform(self, table: DataTable) -> tuple[np.ndarray, np.ndarray | None]:
        encoded = self.encoder.encode(table)
        if encoded.missing_cells():
            encoded = iterative_impute(encoded, self.config.impute, seed=self.seed)
        X = encoded.to_matrix()
        if self.standardizer is not None:
            X = self.standardizer.apply(X)
        y = table.targets.get(self.target)
        return X, (None if y is None else np.asarray(y, dtype=np.float64))


def fit_pipeline(train: DataTable, target: str, config: PipelineConfig | None = None,
                 seed: int = 0) -> tuple[FittedPipeline, np.ndarray, np.ndarray]:
    config = config or PipelineConfig()
    encoder = fit_mestimate(train, target, config.smoothing_m)
    encoded = encoder.encode(train)
    if encoded.missing_cells():
        encoded = iterative_impute(encoded, config.impute, seed=seed)
    X = encoded.to_matrix()
    standardizer = fit_standardize(X) if config.standardize else None
    if standardizer is not None:
        X = standardizer.apply(X)
    pipe = FittedPipeline(config, target, seed, encoder, standardizer, train.feature_names)
    return pipe, X, np.asarray(train.target(target), dtype=np.float64)

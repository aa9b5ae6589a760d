"""Local Outlier Factor with fixed-size neighbourhoods."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .datagen import ConfigError, Dataset
from .neighbors import KnnIndex

RD_EPS = 1e-12


@dataclass(frozen=True)
class LofConfig:
    k: int = 20

    def validate(self, n: int) -> None:
        if not 1 <= self.k < n:
            raise ConfigError(f"LOF needs 1 <= k < n, got k={self.k}, n={n}")


def lof_from_neighbors(indices: np.ndarray, distances: np.ndarray) -> np.ndarray:
    """LOF scores given each point's k neighbour ids and distances (sorted)."""
    k = indices.shape[1]
    k_distance = distances[:, -1]
    reach = np.maximum(k_distance[indices], distances)
    reach_sum = reach.sum(axis=1)
    if (reach_sum < RD_EPS).any():
        warnings.warn(
            "duplicate points give zero reachability sums; clamped at 1e-12",
            RuntimeWarning,
            stacklevel=3,
        )
        reach_sum = np.maximum(reach_sum, RD_EPS)
    lrd = k / reach_sum
    return lrd[indices].sum(axis=1) / (k * lrd)


def lof_score(ds: Dataset | np.ndarray, cfg: LofConfig, index: KnnIndex | None = None) -> np.ndarray:
    """Per-row LOF over all columns with Euclidean distance.

    Pass a prebuilt ``index`` (with ``max_k >= cfg.k``) to score many k values
    against one distance computation.
    """
    X = ds.features if isinstance(ds, Dataset) else np.asarray(ds, dtype=float)
    cfg.validate(X.shape[0])
    if index is None:
        index = KnnIndex(X, max_k=cfg.k)
    return lof_from_neighbors(*index.query(cfg.k))

"""One entry point for fitting any detector and scoring the rows it was fit on."""

from __future__ import annotations

from enum import Enum

import numpy as np

from .autoencoder import DeepHP, FairHP, ae_score, ae_train, fairod_train
from .datagen import ConfigError, Dataset
from .iforest import IForestConfig, iforest_score
from .lof import LofConfig, lof_score
from .neighbors import KnnIndex


class DetectorKind(str, Enum):
    LOF = "lof"
    IFOREST = "iforest"
    DEEPAE = "deepae"
    FAIROD = "fairod"

    @property
    def is_deep(self) -> bool:
        return self in (DetectorKind.DEEPAE, DetectorKind.FAIROD)


ALL_DETECTORS = tuple(DetectorKind)


def config_to_dict(config) -> dict:
    if isinstance(config, LofConfig):
        return {"k": config.k}
    if isinstance(config, IForestConfig):
        return {"n_trees": config.n_trees, "subsample": config.subsample}
    return config.to_dict()


def config_from_dict(kind: DetectorKind | str, data: dict):
    kind = DetectorKind(kind)
    if kind is DetectorKind.LOF:
        return LofConfig(k=int(data["k"]))
    if kind is DetectorKind.IFOREST:
        return IForestConfig(
            n_trees=int(data.get("n_trees", 100)), subsample=int(data.get("subsample", 256))
        )
    if kind is DetectorKind.DEEPAE:
        return DeepHP.from_dict(data)
    return FairHP.from_dict(data)


def fit_score(
    kind: DetectorKind | str,
    ds: Dataset,
    config,
    seed: int,
    *,
    index: KnnIndex | None = None,
    base_scores: np.ndarray | None = None,
    grouping: str = "reported",
) -> np.ndarray:
    """Scores for every row of ``ds``; higher means more outlying."""
    kind = DetectorKind(kind)
    if kind is DetectorKind.LOF:
        return lof_score(ds, config, index=index)
    if kind is DetectorKind.IFOREST:
        cfg = IForestConfig(n_trees=config.n_trees, subsample=config.subsample, seed=seed)
        return iforest_score(ds, cfg)
    if kind is DetectorKind.DEEPAE:
        return ae_score(ae_train(ds, config, seed), ds)
    if not isinstance(config, FairHP):
        raise ConfigError("FairOD needs a FairHP configuration")
    model = fairod_train(ds, config, seed, grouping=grouping, base_scores=base_scores)
    return ae_score(model, ds)

"""Grid search: best overall AUROC for plain detectors, closest to (1, 1, 1) for FairOD."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autoencoder import DeepHP, FairHP, deep_grid, fair_grid
from .datagen import ConfigError, Dataset
from .detectors import DetectorKind, config_to_dict, fit_score
from .iforest import IForestConfig
from .lof import LofConfig
from .metrics import UndefinedMetricError, auroc, flag_top_k, fold_ratio, group_report
from .neighbors import KnnIndex
from .published import published_deep_candidates, published_fair_weights
from .seeding import derive_seed

LOF_K_GRID = tuple(range(10, 251, 10))


@dataclass(frozen=True)
class HpGrid:
    kind: DetectorKind
    candidates: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", DetectorKind(self.kind))
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ConfigError("hyperparameter grid is empty")

    def __len__(self) -> int:
        return len(self.candidates)

    @classmethod
    def default(cls, kind: DetectorKind | str, base: DeepHP | None = None) -> "HpGrid":
        kind = DetectorKind(kind)
        if kind is DetectorKind.LOF:
            return cls(kind, [LofConfig(k) for k in LOF_K_GRID])
        if kind is DetectorKind.IFOREST:
            return cls(kind, [IForestConfig()])
        if kind is DetectorKind.DEEPAE:
            return cls(kind, deep_grid())
        return cls(kind, fair_grid(base or DeepHP()))

    @classmethod
    def published(cls, kind: DetectorKind | str, mode: str, bias: str, beta: float,
                  base: DeepHP | None = None) -> "HpGrid":
        """Candidates restricted to the configurations reported for this scenario.

        Shallow detectors keep their full grids (they are cheap to search).
        """
        kind = DetectorKind(kind)
        if kind is DetectorKind.DEEPAE:
            return cls(kind, published_deep_candidates(mode, bias, beta))
        if kind is DetectorKind.FAIROD:
            base = base or published_deep_candidates(mode, bias, beta)[0]
            weights = published_fair_weights(mode, bias, beta)
            return cls(kind, [FairHP(base=base, alpha=a, gamma=g) for a, g in weights])
        return cls.default(kind)


@dataclass
class LeaderboardRow:
    index: int
    config: dict
    seed: int
    auroc: float
    fold_fr: float | None = None
    fold_tpr: float | None = None
    distance: float | None = None
    error: str | None = None


@dataclass
class TuneResult:
    best: object
    best_index: int
    best_seed: int
    scores: np.ndarray | None
    leaderboard: list[LeaderboardRow] = field(default_factory=list)


def cell_seed(seed: int, index: int) -> int:
    return derive_seed(seed, "tune-cell", index)


def _score_auroc(scores, y) -> float:
    try:
        return auroc(scores, y)
    except UndefinedMetricError:
        return -math.inf


def tune_standard(ds: Dataset, grid: HpGrid, seed: int = 0) -> TuneResult:
    """Pick the configuration with the highest overall AUROC; ties go to the earliest.

    Group labels are ignored. Each cell is trained once with a seed derived from
    ``(seed, cell index)``; a cell that raises scores ``-inf`` and keeps its
    error message on the leaderboard.
    """
    if grid.kind is DetectorKind.FAIROD:
        raise ConfigError("use tune_fairod for FairOD grids")
    index = None
    if grid.kind is DetectorKind.LOF:
        ks = [c.k for c in grid.candidates if 1 <= c.k < ds.n]
        if ks:
            index = KnnIndex(ds.features, max_k=max(ks))
    rows: list[LeaderboardRow] = []
    best_i, best_val, best_scores = 0, -math.inf, None
    for i, config in enumerate(grid.candidates):
        s = cell_seed(seed, i)
        row = LeaderboardRow(index=i, config=config_to_dict(config), seed=s, auroc=-math.inf)
        try:
            scores = fit_score(grid.kind, ds, config, s, index=index)
            row.auroc = _score_auroc(scores, ds.y)
        except Exception as exc:  # noqa: BLE001 - a failed cell is data, not a crash
            row.error = f"{type(exc).__name__}: {exc}"
            scores = None
        if i == 0 or row.auroc > best_val:
            best_i, best_val, best_scores = i, row.auroc, scores
        rows.append(row)
    return TuneResult(
        best=grid.candidates[best_i],
        best_index=best_i,
        best_seed=rows[best_i].seed,
        scores=best_scores,
        leaderboard=rows,
    )


def fairness_distance(auc: float, fold_fr: float, fold_tpr: float) -> float:
    return math.dist((auc, fold_fr, fold_tpr), (1.0, 1.0, 1.0))


def tune_fairod(ds: Dataset, grid: HpGrid, seed: int = 0, *, base_scores=None,
                grouping: str = "reported") -> TuneResult:
    """Pick the (alpha, gamma) whose (AUROC, folded FR ratio, folded TPR ratio) is nearest (1, 1, 1).

    Every cell trains with ``seed`` itself (pass the seed of the DeepAE run
    that produced ``base_scores``), so cells differ only in their fairness
    weights.
    Ratios are folded with ``min(r, 1/r)``; an undefined ratio is replaced by
    the worst folded value observed in the grid (0 if none is defined).
    """
    if grid.kind is not DetectorKind.FAIROD:
        raise ConfigError("tune_fairod expects a FairOD grid")
    groups = ds.groups(grouping)
    if len(np.unique(groups)) < 2:
        raise ConfigError("FairOD tuning needs both groups present")
    s = int(seed)
    k_true = int(ds.y.sum())
    rows: list[LeaderboardRow] = []
    all_scores: list[np.ndarray | None] = []
    for i, config in enumerate(grid.candidates):
        row = LeaderboardRow(index=i, config=config_to_dict(config), seed=s, auroc=-math.inf)
        scores = None
        try:
            scores = fit_score(grid.kind, ds, config, s, base_scores=base_scores, grouping=grouping)
            row.auroc = _score_auroc(scores, ds.y)
            report = group_report(flag_top_k(scores, k_true), ds, grouping=grouping)
            row.fold_fr = fold_ratio(report.fr_ratio)
            row.fold_tpr = fold_ratio(report.tpr_ratio)
        except Exception as exc:  # noqa: BLE001
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
        all_scores.append(scores)

    def worst(attr: str) -> float:
        seen = [getattr(r, attr) for r in rows if r.error is None and getattr(r, attr) is not None]
        return min(seen) if seen else 0.0

    worst_fr, worst_tpr = worst("fold_fr"), worst("fold_tpr")
    best_i, best_d = 0, math.inf
    for row in rows:
        if row.error is not None:
            row.distance = math.inf
        else:
            fr = row.fold_fr if row.fold_fr is not None else worst_fr
            tpr = row.fold_tpr if row.fold_tpr is not None else worst_tpr
            row.distance = fairness_distance(row.auroc, fr, tpr)
        if row.distance < best_d:
            best_i, best_d = row.index, row.distance
    return TuneResult(
        best=grid.candidates[best_i],
        best_index=best_i,
        best_seed=s,
        scores=all_scores[best_i],
        leaderboard=rows,
    )

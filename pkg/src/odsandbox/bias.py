"""Known-bias injectors: each maps an unbiased Dataset to a biased one.

All injectors act on group ``b`` only (the underprivileged group) and are the
identity at zero strength. Removal-style injectors draw one permutation per
seed and remove a prefix of it, so the removed set grows monotonically with
the bias strength.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from typing import Any

import numpy as np

from .datagen import ConfigError, Dataset, FeatureRole, draw_outliers


class BiasKind(str, enum.Enum):
    NONE = "none"
    SIZE = "size"
    UNDERREP = "underrep"
    VARIANCE = "variance"
    MEAN = "mean"
    OBFUSCATION = "obfuscation"
    BASE_RATE = "base_rate"


class SamplingMode(str, enum.Enum):
    EXACT = "exact"
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class BiasSpec:
    kind: BiasKind = BiasKind.NONE
    beta: float = 0.0
    outliers_a: int | None = None
    outliers_b: int | None = None
    mode: SamplingMode = SamplingMode.EXACT
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", BiasKind(self.kind))
        object.__setattr__(self, "mode", SamplingMode(self.mode))
        if self.kind in (BiasKind.SIZE, BiasKind.UNDERREP, BiasKind.OBFUSCATION):
            _check_fraction(self.beta)
        elif self.kind in (BiasKind.VARIANCE, BiasKind.MEAN) and not self.beta >= 0:
            raise ConfigError(f"{self.kind.value} bias needs beta >= 0, got {self.beta}")
        elif self.kind is BiasKind.BASE_RATE and (self.outliers_a is None or self.outliers_b is None):
            raise ConfigError("base_rate bias needs outliers_a and outliers_b")

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["kind"] = self.kind.value
        out["mode"] = self.mode.value
        return out


def _check_fraction(beta: float) -> None:
    if not 0.0 <= beta < 1.0:
        raise ConfigError(f"removal/flip rate must lie in [0, 1), got {beta}")


def _tag(ds: Dataset, name: str, beta) -> Dataset:
    return ds.with_scenario(name, beta=beta)


def _removal_mask(candidates: np.ndarray, beta: float, mode: SamplingMode, rng) -> np.ndarray:
    """Indices (subset of ``candidates``) selected for removal or flipping."""
    if mode is SamplingMode.EXACT:
        order = rng.permutation(candidates)
        return np.sort(order[: int(round(beta * len(candidates)))])
    draws = rng.random(len(candidates))
    return candidates[draws < beta]


def inject_size_bias(ds: Dataset, beta: float, mode=SamplingMode.EXACT, seed: int = 0) -> Dataset:
    """Drop group-b rows: exactly ``round(beta * n_b)`` or each with probability beta."""
    _check_fraction(beta)
    if beta == 0:
        return _tag(ds, "size", beta)
    rng = np.random.default_rng(seed)
    drop = _removal_mask(np.flatnonzero(ds.group == "b"), beta, SamplingMode(mode), rng)
    keep = np.ones(ds.n, dtype=bool)
    keep[drop] = False
    return _tag(ds.take(keep), "size", beta)


def inject_underrep_bias(ds: Dataset, beta: float, mode=SamplingMode.EXACT, seed: int = 0) -> Dataset:
    """Drop only the positively-labelled group-b rows."""
    _check_fraction(beta)
    if beta == 0:
        return _tag(ds, "underrep", beta)
    rng = np.random.default_rng(seed)
    eligible = np.flatnonzero((ds.group == "b") & (ds.y == 1))
    drop = _removal_mask(eligible, beta, SamplingMode(mode), rng)
    keep = np.ones(ds.n, dtype=bool)
    keep[drop] = False
    return _tag(ds.take(keep), "underrep", beta)


def _proxy_and_culprit(ds: Dataset) -> np.ndarray:
    return np.concatenate([ds.columns(FeatureRole.PROXY), ds.columns(FeatureRole.INCRIMINATING)])


def inject_variance_shift(ds: Dataset, beta: float) -> Dataset:
    """Multiply the variance of group-b proxy and culprit values by ``1 + beta``.

    Values are rescaled around their generative mean so group supports and
    the inlier/outlier modes stay where they were.
    """
    if not beta >= 0:
        raise ConfigError(f"variance shift needs beta >= 0, got {beta}")
    if ds.centers is None:
        raise ConfigError("variance shift requires simulation provenance (per-cell generative means)")
    if beta == 0:
        return _tag(ds, "variance", beta)
    rows = np.flatnonzero(ds.group == "b")
    cols = _proxy_and_culprit(ds)
    features = ds.features.copy()
    block = np.ix_(rows, cols)
    centers = ds.centers[block]
    features[block] = centers + (features[block] - centers) * np.sqrt(1.0 + beta)
    return _tag(ds.replace(features=features), "variance", beta)


def inject_mean_shift(ds: Dataset, beta: float) -> Dataset:
    """Add ``beta`` to every group-b culprit value."""
    if not beta >= 0:
        raise ConfigError(f"mean shift needs beta >= 0, got {beta}")
    if beta == 0:
        return _tag(ds, "mean", beta)
    block = np.ix_(np.flatnonzero(ds.group == "b"), ds.columns(FeatureRole.INCRIMINATING))
    features = ds.features.copy()
    features[block] += beta
    centers = None
    if ds.centers is not None:
        centers = ds.centers.copy()
        centers[block] += beta
    return _tag(ds.replace(features=features, centers=centers), "mean", beta)


def inject_obfuscation(ds: Dataset, beta: float, seed: int = 0) -> Dataset:
    """Report a fraction of group-b rows as group a and disguise their proxies.

    Exactly ``round(beta * n_b)`` rows flip; each redraws a uniformly chosen
    nonempty subset of its proxy columns from group a's proxy distribution.
    """
    _check_fraction(beta)
    if beta == 0:
        return _tag(ds, "obfuscation", beta)
    cfg = ds.sim_config
    if cfg is None:
        raise ConfigError("obfuscation needs the simulation config to draw group-a proxies")
    rng = np.random.default_rng(seed)
    flipped = _removal_mask(np.flatnonzero(ds.group == "b"), beta, SamplingMode.EXACT, rng)
    proxy = ds.columns(FeatureRole.PROXY)
    m = len(proxy)
    codes = rng.integers(1, 2**m, size=len(flipped))
    subset = ((codes[:, None] >> np.arange(m)) & 1).astype(bool)
    fresh = rng.normal(cfg.proxy_mean_a, cfg.std, size=(len(flipped), m))

    features = ds.features.copy()
    block = np.ix_(flipped, proxy)
    features[block] = np.where(subset, fresh, features[block])
    centers = None
    if ds.centers is not None:
        centers = ds.centers.copy()
        centers[block] = np.where(subset, cfg.proxy_mean_a, centers[block])
    group = ds.group.copy()
    group[flipped] = "a"
    return _tag(ds.replace(features=features, centers=centers, group=group), "obfuscation", beta)


def set_unequal_base_rates(ds: Dataset, outliers_a: int, outliers_b: int, seed: int = 0) -> Dataset:
    """Move outliers between groups while keeping every inlier and the outlier total.

    A group that loses outliers drops a random subset of them; a group that
    gains outliers receives freshly drawn rows from the simulation recipe.
    """
    outliers_a, outliers_b = int(outliers_a), int(outliers_b)
    groups = ds.true_group
    current = {g: int(ds.y[groups == g].sum()) for g in ("a", "b")}
    target = {"a": outliers_a, "b": outliers_b}
    total = current["a"] + current["b"]
    if outliers_a + outliers_b != total:
        raise ConfigError(f"outlier counts must sum to the current total {total}, got {outliers_a}+{outliers_b}")
    for g in ("a", "b"):
        inliers = int(((groups == g) & (ds.y == 0)).sum())
        if not 0 <= target[g] < inliers:
            raise ConfigError(f"group {g}: {target[g]} outliers infeasible next to {inliers} inliers")
    if target == current:
        return _tag(ds, "base_rate", outliers_b)
    cfg = ds.sim_config
    if cfg is None or ds.centers is None:
        raise ConfigError("regenerating outliers needs simulation provenance")

    rng = np.random.default_rng(seed)
    next_id = int(ds.row_id.max()) + 1
    parts = []
    for g in ("a", "b"):
        rows = np.flatnonzero(groups == g)
        inl = rows[ds.y[rows] == 0]
        out = rows[ds.y[rows] == 1]
        keep_out = np.sort(rng.permutation(out)[: target[g]])
        part = ds.take(np.concatenate([inl, keep_out]))
        extra = target[g] - len(keep_out)
        if extra > 0:
            feats, cents = draw_outliers(cfg, rng, g, extra)
            labels = np.full(extra, g)
            part = Dataset(
                features=np.vstack([part.features, feats]),
                group=np.concatenate([part.group, labels]),
                true_group=np.concatenate([part.true_group, labels]),
                y=np.concatenate([part.y, np.ones(extra, dtype=np.int8)]),
                roles=ds.roles,
                meta=ds.meta,
                centers=np.vstack([part.centers, cents]),
                row_id=np.concatenate([part.row_id, np.arange(next_id, next_id + extra)]),
            )
            next_id += extra
        parts.append(part)
    merged = Dataset(
        features=np.vstack([p.features for p in parts]),
        group=np.concatenate([p.group for p in parts]),
        true_group=np.concatenate([p.true_group for p in parts]),
        y=np.concatenate([p.y for p in parts]),
        roles=ds.roles,
        meta=ds.meta,
        centers=np.vstack([p.centers for p in parts]),
        row_id=np.concatenate([p.row_id for p in parts]),
    )
    return _tag(merged, "base_rate", outliers_b)


def apply_bias(ds: Dataset, spec: BiasSpec) -> Dataset:
    kind = spec.kind
    if kind is BiasKind.NONE:
        return ds.with_scenario("unbiased", beta=0.0)
    if kind is BiasKind.SIZE:
        return inject_size_bias(ds, spec.beta, spec.mode, spec.seed)
    if kind is BiasKind.UNDERREP:
        return inject_underrep_bias(ds, spec.beta, spec.mode, spec.seed)
    if kind is BiasKind.VARIANCE:
        return inject_variance_shift(ds, spec.beta)
    if kind is BiasKind.MEAN:
        return inject_mean_shift(ds, spec.beta)
    if kind is BiasKind.OBFUSCATION:
        return inject_obfuscation(ds, spec.beta, spec.seed)
    return set_unequal_base_rates(ds, spec.outliers_a, spec.outliers_b, spec.seed)

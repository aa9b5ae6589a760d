"""Seeded synthetic populations with two protected groups.

Every row carries a reported group, its true (pre-obfuscation) group and a
binary risk label. Columns come in three roles: proxy columns that encode
group membership, incriminating (culprit) columns that encode risk, and
occlusion columns that are pure noise.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

GROUPS = ("a", "b")


class ConfigError(ValueError):
    """Raised for invalid simulation, bias or detector configurations."""


class FeatureRole(str, enum.Enum):
    PROXY = "proxy"
    INCRIMINATING = "incriminating"
    OCCLUSION = "occlusion"

    @property
    def prefix(self) -> str:
        return {"proxy": "g", "incriminating": "c", "occlusion": "o"}[self.value]

    @classmethod
    def from_prefix(cls, prefix: str) -> "FeatureRole":
        for role in cls:
            if role.prefix == prefix:
                return role
        raise ValueError(f"unknown role prefix {prefix!r}")


class OutlierMode(str, enum.Enum):
    CLUSTERED = "clustered"
    SCATTERED = "scattered"


@dataclass(frozen=True)
class SimConfig:
    n_per_group: int = 1000
    base_rate: float = 0.1
    dims_per_role: int = 5
    proxy_mean_a: float = 5.0
    proxy_mean_b: float = 20.0
    culprit_inlier_mean: float = 0.0
    culprit_outlier_mean: float = 3.0
    std: float = 1.0
    outlier_mode: OutlierMode = OutlierMode.CLUSTERED
    scatter_factors: tuple[float, ...] = (3.0, 6.0, 9.0, 12.0, 15.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "outlier_mode", OutlierMode(self.outlier_mode))
        object.__setattr__(self, "scatter_factors", tuple(float(f) for f in self.scatter_factors))
        self.validate()

    def validate(self) -> None:
        if int(self.n_per_group) < 1:
            raise ConfigError(f"n_per_group must be positive, got {self.n_per_group}")
        if int(self.dims_per_role) < 1:
            raise ConfigError(f"dims_per_role must be positive, got {self.dims_per_role}")
        if not 0.0 < self.base_rate < 0.5:
            raise ConfigError(f"base_rate must lie in (0, 0.5), got {self.base_rate}")
        if not self.std > 0:
            raise ConfigError(f"std must be positive, got {self.std}")
        if not self.scatter_factors:
            raise ConfigError("scatter_factors must not be empty")
        if any(f <= 1 for f in self.scatter_factors):
            raise ConfigError(f"scatter factors must exceed 1, got {self.scatter_factors}")
        if self.proxy_mean_a == self.proxy_mean_b:
            raise ConfigError("proxy means of the two groups must differ")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def outliers_per_group(self) -> int:
        return int(round(self.base_rate * self.n_per_group))

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["outlier_mode"] = self.outlier_mode.value
        out["scatter_factors"] = list(self.scatter_factors)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown SimConfig keys: {sorted(unknown)}")
        return cls(**data)


def default_roles(dims_per_role: int = 5) -> tuple[FeatureRole, ...]:
    return (
        (FeatureRole.PROXY,) * dims_per_role
        + (FeatureRole.INCRIMINATING,) * dims_per_role
        + (FeatureRole.OCCLUSION,) * dims_per_role
    )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus per-row group/label columns and per-column roles.

    ``centers`` holds the generative mean of every cell, which the variance
    shift injector needs to re-centre values; it is ``None`` when the data
    was not produced by :func:`simulate` (or lost its provenance).
    """

    features: np.ndarray
    group: np.ndarray
    true_group: np.ndarray
    y: np.ndarray
    roles: tuple[FeatureRole, ...]
    meta: dict[str, Any] = field(default_factory=dict)
    centers: np.ndarray | None = None
    row_id: np.ndarray | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {features.shape}")
        n, d = features.shape
        group = np.asarray(self.group, dtype="<U1")
        true_group = np.asarray(self.true_group, dtype="<U1")
        y = np.asarray(self.y, dtype=np.int8)
        for name, col in (("group", group), ("true_group", true_group), ("y", y)):
            if col.shape != (n,):
                raise ValueError(f"{name} has shape {col.shape}, expected ({n},)")
        if not np.isin(group, GROUPS).all() or not np.isin(true_group, GROUPS).all():
            raise ValueError("group labels must be 'a' or 'b'")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("y must be binary")
        roles = tuple(FeatureRole(r) for r in self.roles)
        if len(roles) != d:
            raise ValueError(f"{len(roles)} roles for {d} columns")
        row_id = np.arange(n) if self.row_id is None else np.asarray(self.row_id, dtype=np.int64)
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "group", _frozen(group))
        object.__setattr__(self, "true_group", _frozen(true_group))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "row_id", _frozen(row_id))
        if self.centers is not None:
            centers = np.asarray(self.centers, dtype=float)
            if centers.shape != features.shape:
                raise ValueError("centers must match the feature matrix shape")
            object.__setattr__(self, "centers", _frozen(centers))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def sim_config(self) -> SimConfig | None:
        sim = self.meta.get("sim")
        return None if sim is None else SimConfig.from_dict(sim)

    @property
    def scenario(self) -> str:
        return self.meta.get("scenario", "unbiased")

    def columns(self, role: FeatureRole) -> np.ndarray:
        return np.flatnonzero([r is role for r in self.roles])

    def column_names(self) -> list[str]:
        counts: dict[FeatureRole, int] = {}
        names = []
        for role in self.roles:
            counts[role] = counts.get(role, 0) + 1
            names.append(f"{role.prefix}{counts[role]}")
        return names

    def groups(self, grouping: str = "true") -> np.ndarray:
        if grouping == "true":
            return self.true_group
        if grouping == "reported":
            return self.group
        raise ValueError(f"grouping must be 'true' or 'reported', got {grouping!r}")

    def take(self, rows) -> "Dataset":
        """Row subset (boolean mask or index array), preserving row ids."""
        rows = np.asarray(rows)
        return dataclasses.replace(
            self,
            features=self.features[rows],
            group=self.group[rows],
            true_group=self.true_group[rows],
            y=self.y[rows],
            centers=None if self.centers is None else self.centers[rows],
            row_id=self.row_id[rows],
        )

    def replace(self, **changes) -> "Dataset":
        return dataclasses.replace(self, **changes)

    def with_scenario(self, tag: str, **extra) -> "Dataset":
        meta = dict(self.meta)
        meta["scenario"] = tag
        meta.update(extra)
        return dataclasses.replace(self, meta=meta)

    def identical_to(self, other: "Dataset") -> bool:
        """Bitwise equality of every array (the scenario tag is ignored)."""
        pairs = [
            (self.features, other.features),
            (self.group, other.group),
            (self.true_group, other.true_group),
            (self.y, other.y),
            (self.row_id, other.row_id),
        ]
        if (self.centers is None) != (other.centers is None):
            return False
        if self.centers is not None:
            pairs.append((self.centers, other.centers))
        return self.roles == other.roles and all(
            a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()
            for a, b in pairs
        )


def _draw_group(cfg: SimConfig, rng: np.random.Generator, proxy_mean: float, n_rows: int, n_out: int):
    m = cfg.dims_per_role
    n_in = n_rows - n_out
    proxy = rng.normal(proxy_mean, cfg.std, size=(n_rows, m))
    culprit = rng.normal(cfg.culprit_inlier_mean, cfg.std, size=(n_rows, m))
    occlusion = rng.normal(0.0, 1.0, size=(n_rows, m))
    culprit_center = np.full((n_rows, m), cfg.culprit_inlier_mean)
    if n_out:
        out = slice(n_in, n_rows)
        if cfg.outlier_mode is OutlierMode.CLUSTERED:
            culprit[out] = rng.normal(cfg.culprit_outlier_mean, cfg.std, size=(n_out, m))
            culprit_center[out] = cfg.culprit_outlier_mean
        else:
            culprit[out] = scattered_culprits(cfg, rng, n_out)
    features = np.hstack([proxy, culprit, occlusion])
    centers = np.hstack([np.full((n_rows, m), proxy_mean), culprit_center, np.zeros((n_rows, m))])
    y = np.zeros(n_rows, dtype=np.int8)
    y[n_in:] = 1
    return features, centers, y


def scattered_culprits(cfg: SimConfig, rng: np.random.Generator, n_out: int) -> np.ndarray:
    """Culprit values for scattered outliers.

    Each outlier inflates the variance of a uniformly chosen nonempty subset
    of culprit columns by one factor drawn from ``cfg.scatter_factors``.
    """
    m = cfg.dims_per_role
    values = rng.normal(cfg.culprit_inlier_mean, cfg.std, size=(n_out, m))
    codes = rng.integers(1, 2**m, size=n_out)
    subset = ((codes[:, None] >> np.arange(m)) & 1).astype(bool)
    factors = rng.choice(np.asarray(cfg.scatter_factors), size=n_out)
    inflated = rng.normal(0.0, 1.0, size=(n_out, m)) * (cfg.std * np.sqrt(factors))[:, None]
    return np.where(subset, cfg.culprit_inlier_mean + inflated, values)


def draw_outliers(cfg: SimConfig, rng: np.random.Generator, group: str, count: int):
    """Fresh outlier rows for ``group`` following the config's outlier recipe.

    Returns ``(features, centers)``.
    """
    mean = cfg.proxy_mean_a if group == "a" else cfg.proxy_mean_b
    features, centers, _ = _draw_group(cfg, rng, mean, count, count)
    return features, centers


def simulate(cfg: SimConfig) -> Dataset:
    """Unbiased population: ``n_per_group`` rows per group, equal base rates.

    Rows are laid out group by group, inliers first. The label count per
    group is exactly ``round(base_rate * n_per_group)``.
    """
    cfg.validate()
    rng = np.random.default_rng(int(cfg.seed))
    n_out = cfg.outliers_per_group
    blocks = [
        _draw_group(cfg, rng, mean, cfg.n_per_group, n_out)
        for mean in (cfg.proxy_mean_a, cfg.proxy_mean_b)
    ]
    features = np.vstack([b[0] for b in blocks])
    centers = np.vstack([b[1] for b in blocks])
    y = np.concatenate([b[2] for b in blocks])
    group = np.repeat(np.array(GROUPS), cfg.n_per_group)
    return Dataset(
        features=features,
        group=group,
        true_group=group.copy(),
        y=y,
        roles=default_roles(cfg.dims_per_role),
        meta={"seed": int(cfg.seed), "scenario": "unbiased", "sim": cfg.to_dict()},
        centers=centers,
    )


@dataclass
class GroupSummary:
    size: int
    outliers: int
    base_rate: float | None
    role_means: dict[str, np.ndarray]
    role_vars: dict[str, np.ndarray]


def summarize(ds: Dataset, grouping: str = "true") -> dict[str, GroupSummary]:
    """Per-group counts, base rates and per-role column means/variances.

    Base rates (and moments) of an empty group are reported as ``None`` /
    NaN arrays rather than raising.
    """
    labels = ds.groups(grouping)
    out = {}
    for g in GROUPS:
        mask = labels == g
        size = int(mask.sum())
        outliers = int(ds.y[mask].sum())
        means, variances = {}, {}
        for role in FeatureRole:
            cols = ds.columns(role)
            block = ds.features[np.ix_(mask, cols)]
            if size:
                means[role.value] = block.mean(axis=0)
                variances[role.value] = block.var(axis=0, ddof=1) if size > 1 else np.zeros(len(cols))
            else:
                means[role.value] = np.full(len(cols), np.nan)
                variances[role.value] = np.full(len(cols), np.nan)
        out[g] = GroupSummary(
            size=size,
            outliers=outliers,
            base_rate=outliers / size if size else None,
            role_means=means,
            role_vars=variances,
        )
    return out

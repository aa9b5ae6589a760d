"""Closed-form expectations for LOF and iTree splits on idealised cluster geometries,
plus a bridge that realises those geometries as data so the real detectors can
be run against the formulas.

Distances are average pairwise distances: ``d``/``D`` within a cluster of
group a/b, ``delta_a``/``delta_b`` between an inlier and an outlier cluster of
the same group.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .datagen import ConfigError, Dataset, FeatureRole
from .iforest import IForestConfig, draw_threshold, iforest_score
from .lof import LofConfig, lof_score
from .metrics import flag_top_k, group_report

MASKING_TOLERANCE = 1.1     # delta_b <= 1.1 * D counts as "delta_b ~ D"
_REL_TOL = 1e-9


@dataclass(frozen=True)
class IdealGeometry:
    n_a: int = 1000
    n_b: int = 1000
    base_rate: float = 0.1
    d: float = 1.0
    D: float = 1.0
    delta_a: float = 10.0
    delta_b: float = 10.0
    delta_g: float = 0.0
    inlier_subpops: tuple[int, ...] = ()    # group-b inlier micro-cluster sizes
    outlier_subpops: tuple[int, ...] = ()   # group-b outlier micro-cluster sizes
    m: int = 0                              # outlier local-neighbourhood size (scattered)
    d_out: float | None = None
    D_out: float | None = None
    alpha: int = 0                          # inlier neighbours of a dispersed b-outlier
    k: int = 150
    dims: int = 1
    span: float | None = None               # extent of the split range along one axis

    def __post_init__(self):
        object.__setattr__(self, "inlier_subpops", tuple(int(s) for s in self.inlier_subpops))
        object.__setattr__(self, "outlier_subpops", tuple(int(s) for s in self.outlier_subpops))
        if self.d <= 0 or self.D <= 0:
            raise ConfigError("intra-cluster distances must be positive")
        if min(self.delta_a, self.delta_b) <= 0 or self.delta_g < 0:
            raise ConfigError("inter-cluster distances must be positive")
        if self.n_a < 0 or self.n_b < 0 or not 0 < self.base_rate < 1:
            raise ConfigError("invalid group sizes or base rate")
        if self.k < 1 or self.dims < 1:
            raise ConfigError("k and dims must be >= 1")

    @property
    def outliers_a(self) -> int:
        return int(round(self.n_a * self.base_rate))

    @property
    def outliers_b(self) -> int:
        return int(round(self.n_b * self.base_rate))

    @property
    def f(self) -> int:
        return len(self.inlier_subpops) or 1

    @property
    def g(self) -> int:
        return len(self.outlier_subpops) or 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "IdealGeometry":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown geometry fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class TheoryPrediction:
    claim: str
    values: dict[str, float] = field(default_factory=dict)
    verdict: str | None = None
    premises: dict[str, bool] = field(default_factory=dict)
    flags: dict[str, bool] = field(default_factory=dict)

    @property
    def premises_hold(self) -> bool:
        return all(self.premises.values())


def _compare(x: float, y: float, left: str, right: str) -> str:
    if math.isclose(x, y, rel_tol=_REL_TOL, abs_tol=1e-12):
        return "equal"
    return left if x > y else right


def _finish(pred: TheoryPrediction, verdict: str) -> TheoryPrediction:
    pred.verdict = verdict if pred.premises_hold else None
    return pred


def expected_lof_clustered(size_o: int, k: int, delta: float, c: float) -> float:
    """Expected LOF of a point in a cluster of ``size_o`` points (intra distance ``c``)
    sitting ``delta`` away from a large cluster with the same intra distance.

    Returns 1 when ``k <= size_o``: the neighbourhood never leaves the cluster.
    """
    if c <= 0 or delta <= 0:
        raise ConfigError("distances must be positive")
    if delta < c:
        raise ConfigError(f"delta={delta} is below the intra-cluster distance c={c}")
    if k < 1:
        raise ConfigError("k must be >= 1")
    if k <= size_o:
        return 1.0
    return (size_o / delta + (k - size_o) / c) / (k / delta)


def expected_lof_dispersed(k: int, alpha: int, delta: float, d_in: float) -> float:
    """Expected LOF of an outlier with no outlier neighbourhood but ``alpha`` inlier neighbours."""
    if delta <= 0 or d_in <= 0:
        raise ConfigError("distances must be positive")
    if not 0 <= alpha <= k:
        raise ConfigError("alpha must lie in [0, k]")
    return ((k - alpha) / delta + alpha / d_in) / (k / delta)


def split_probability(gap: float, range_: float, dims: int = 1) -> float:
    """Chance a uniform split point falls in a gap; ``dims`` independent axes multiply."""
    if gap <= 0 or range_ <= 0:
        raise ConfigError("gap and range must be positive")
    if gap > range_:
        raise ConfigError(f"gap {gap} exceeds the range {range_}")
    if dims < 1:
        raise ConfigError("dims must be >= 1")
    return (gap / range_) ** dims


def split_frequency(lo: float, hi: float, gap_lo: float, gap_hi: float,
                    samples: int = 100_000, seed: int = 0) -> float:
    """Monte-Carlo frequency of iTree split points on (lo, hi) landing in (gap_lo, gap_hi)."""
    if not lo <= gap_lo < gap_hi <= hi:
        raise ConfigError("gap must lie inside the range")
    rng = np.random.default_rng(seed)
    hits = sum(gap_lo < draw_threshold(rng, lo, hi) < gap_hi for _ in range(samples))
    return hits / samples


# ---------------------------------------------------------------- closed forms

def check_lemma1(geom: IdealGeometry) -> TheoryPrediction:
    size_o, size_i = geom.outliers_a, geom.n_a - geom.outliers_a
    pred = TheoryPrediction("lemma1")
    pred.premises = {"fewer_outliers": size_o < size_i, "gap_exceeds_intra": geom.delta_a > geom.d}
    if not pred.premises_hold:
        return pred
    e_out = expected_lof_clustered(size_o, geom.k, geom.delta_a, geom.d)
    pred.values = {"outlier": e_out, "inlier": 1.0}
    pred.flags = {"masking": geom.k <= size_o}
    return _finish(pred, "masked" if geom.k <= size_o else "outliers")


def check_lemma2(geom: IdealGeometry) -> TheoryPrediction:
    sizes = geom.outlier_subpops or (geom.outliers_b,)
    pred = TheoryPrediction("lemma2")
    pred.premises = {"gap_exceeds_intra": geom.delta_b > geom.D}
    if not pred.premises_hold:
        return pred
    pred.values = {
        f"outlier_subpop_{i}": expected_lof_clustered(s, geom.k, geom.delta_b, geom.D)
        for i, s in enumerate(sizes)
    }
    pred.flags = {"masking": geom.k <= max(sizes)}
    return _finish(pred, "masked" if geom.k <= max(sizes) else "outliers")


def check_prop1(geom: IdealGeometry) -> TheoryPrediction:
    """Sparser group b: which group's outliers get the larger expected LOF."""
    pred = TheoryPrediction("prop1")
    pred.premises = {
        "equal_sizes": geom.n_a == geom.n_b,
        "equal_gaps": math.isclose(geom.delta_a, geom.delta_b),
        "b_not_denser": geom.D >= geom.d,
        "k_exceeds_outliers": geom.k > geom.n_a * geom.base_rate,
        "gaps_cover_intra": geom.delta_a >= geom.d and geom.delta_b >= geom.D,
    }
    if not pred.premises_hold:
        return pred
    e_a = expected_lof_clustered(geom.outliers_a, geom.k, geom.delta_a, geom.d)
    e_b = expected_lof_clustered(geom.outliers_b, geom.k, geom.delta_b, geom.D)
    pred.values = {"a_outlier": e_a, "b_outlier": e_b}
    pred.flags = {"masking_b": geom.delta_b <= MASKING_TOLERANCE * geom.D}
    return _finish(pred, _compare(e_a, e_b, "a", "b"))


def _b_subpops(geom: IdealGeometry) -> tuple[tuple[int, ...], tuple[int, ...]]:
    inl = geom.inlier_subpops or (geom.n_b - geom.outliers_b,)
    out = geom.outlier_subpops or (geom.outliers_b,)
    return inl, out


def check_prop3(geom: IdealGeometry) -> TheoryPrediction:
    """Group b fragmented into micro-clusters: b-outliers outscore a-outliers, and
    inlier micro-clusters smaller than outlier ones outscore them."""
    inl, out = _b_subpops(geom)
    pred = TheoryPrediction("prop3")
    pred.premises = {
        "equal_intra": math.isclose(geom.d, geom.D),
        "equal_gaps": math.isclose(geom.delta_a, geom.delta_b),
        "gap_exceeds_intra": geom.delta_a > geom.d,
        "k_exceeds_outliers": geom.k > geom.n_a * geom.base_rate,
        "b_sizes_match": sum(inl) + sum(out) == geom.n_b,
    }
    if not pred.premises_hold:
        return pred
    e_a = expected_lof_clustered(geom.outliers_a, geom.k, geom.delta_a, geom.d)
    e_out = [expected_lof_clustered(s, geom.k, geom.delta_b, geom.D) for s in out]
    e_in = [expected_lof_clustered(s, geom.k, geom.delta_b, geom.D) for s in inl]
    pred.values = {"a_outlier": e_a, "b_outlier_mean": float(np.mean(e_out))}
    pred.values.update({f"b_outlier_{i}": v for i, v in enumerate(e_out)})
    pred.values.update({f"b_inlier_{j}": v for j, v in enumerate(e_in)})
    pred.flags = {
        "inversion": any(si < so < geom.k for si in inl for so in out),
        "all_masked": geom.k <= min(inl + out),
    }
    return _finish(pred, _compare(float(np.mean(e_out)), e_a, "b", "a"))


def _span(geom: IdealGeometry) -> float:
    if geom.span is None:
        raise ConfigError("split checks need the split range 'span'")
    return geom.span


def check_prop2(geom: IdealGeometry) -> TheoryPrediction:
    """Splits fall between sparser group-b outliers more often; inlier/outlier gaps tie."""
    span = _span(geom)
    pred = TheoryPrediction("prop2")
    pred.premises = {
        "equal_gaps": math.isclose(geom.delta_a, geom.delta_b),
        "b_not_denser": geom.D >= geom.d,
        "span_covers": span >= max(geom.D, geom.delta_a, geom.delta_b),
    }
    if not pred.premises_hold:
        return pred
    p_a = split_probability(geom.d, span, geom.dims)
    p_b = split_probability(geom.D, span, geom.dims)
    p_io_a = split_probability(geom.delta_a, span)
    p_io_b = split_probability(geom.delta_b, span)
    pred.values = {"a_outlier_split": p_a, "b_outlier_split": p_b,
                   "a_inlier_outlier_split": p_io_a, "b_inlier_outlier_split": p_io_b,
                   "difference": p_b - p_a}
    pred.flags = {"inlier_outlier_equal": math.isclose(p_io_a, p_io_b)}
    return _finish(pred, _compare(p_b, p_a, "b", "a"))


def check_prop4(geom: IdealGeometry) -> TheoryPrediction:
    """b micro-clusters spread along proxy axes draw more proxy splits; culprit
    splits between inliers and outliers stay equally likely (recall retained)."""
    span = _span(geom)
    pred = TheoryPrediction("prop4")
    pred.premises = {
        "equal_intra": math.isclose(geom.d, geom.D),
        "proxy_gap_exceeds_intra": geom.delta_g > geom.d,
        "span_covers": span >= max(geom.delta_g, geom.delta_a, geom.delta_b),
    }
    if not pred.premises_hold:
        return pred
    p_proxy_b = split_probability(geom.delta_g, span)
    p_proxy_a = split_probability(geom.d, span)
    p_cul_a = split_probability(geom.delta_a, span)
    p_cul_b = split_probability(geom.delta_b, span)
    pred.values = {"b_proxy_split": p_proxy_b, "a_proxy_split": p_proxy_a,
                   "a_culprit_split": p_cul_a, "b_culprit_split": p_cul_b}
    pred.flags = {"recall_retained": math.isclose(p_cul_a, p_cul_b)}
    return _finish(pred, _compare(p_proxy_b, p_proxy_a, "b", "a"))


def check_prop5(geom: IdealGeometry) -> TheoryPrediction:
    """Scattered outliers in local neighbourhoods of size ``m``: a-outliers outscore
    b-outliers when b's inliers are sparser."""
    d_out = geom.d_out if geom.d_out is not None else geom.d
    D_out = geom.D_out if geom.D_out is not None else geom.D
    delta = geom.delta_a
    pred = TheoryPrediction("prop5")
    pred.premises = {
        "k_exceeds_m": geom.k > geom.m >= 1,
        "equal_gaps": math.isclose(geom.delta_a, geom.delta_b),
        "gap_covers_neighbourhoods": delta >= D_out,
        "b_inliers_sparser": geom.d < geom.D,
        "b_outliers_sparser": d_out < D_out,
    }
    if not pred.premises_hold:
        return pred
    e_a = expected_lof_clustered(geom.m, geom.k, delta, geom.d)
    e_b = expected_lof_clustered(geom.m, geom.k, delta, geom.D)
    pred.values = {"a_outlier": e_a, "b_outlier": e_b}
    if geom.alpha:
        pred.values["b_outlier_dispersed"] = expected_lof_dispersed(geom.k, geom.alpha, delta, geom.D)
    return _finish(pred, _compare(e_a, e_b, "a", "b"))


CHECKS = {
    "lemma1": check_lemma1,
    "lemma2": check_lemma2,
    "1": check_prop1,
    "2": check_prop2,
    "3": check_prop3,
    "4": check_prop4,
    "5": check_prop5,
}


# ---------------------------------------------------------------- realisation

@dataclass(frozen=True)
class Cluster:
    name: str
    group: str
    outlier: bool
    size: int
    intra: float


def geometry_clusters(geom: IdealGeometry) -> list[Cluster]:
    """The micro-clusters a geometry describes, group a first."""
    out: list[Cluster] = []
    for grp, n, o, intra, intra_out, inl_sub, out_sub in (
        ("a", geom.n_a, geom.outliers_a, geom.d, geom.d_out, (), ()),
        ("b", geom.n_b, geom.outliers_b, geom.D, geom.D_out, geom.inlier_subpops, geom.outlier_subpops),
    ):
        if n == 0:
            continue
        inliers = inl_sub or (n - o,)
        if geom.m:
            full, rest = divmod(o, geom.m)
            outliers = (geom.m,) * full + ((rest,) if rest else ())
        else:
            outliers = out_sub or ((o,) if o else ())
        o_intra = intra_out if intra_out is not None else intra
        out += [Cluster(f"{grp}_inlier_{i}", grp, False, s, intra) for i, s in enumerate(inliers) if s]
        out += [Cluster(f"{grp}_outlier_{j}", grp, True, s, o_intra) for j, s in enumerate(outliers) if s]
    return out


def _target_distances(geom: IdealGeometry, clusters: list[Cluster]) -> np.ndarray:
    """Average distance wanted between every pair of clusters."""
    gap = {"a": geom.delta_a, "b": geom.delta_b}
    within = [c.intra for c in clusters]
    separation = 10.0 * max([geom.delta_a, geom.delta_b, geom.delta_g] + within)
    n = len(clusters)
    T = np.zeros((n, n))
    for i, ci in enumerate(clusters):
        for j, cj in enumerate(clusters):
            if i == j:
                continue
            if ci.group != cj.group:
                T[i, j] = separation
            elif ci.outlier == cj.outlier and geom.delta_g > 0:
                T[i, j] = geom.delta_g
            else:
                T[i, j] = gap[ci.group]
    return T


def _embed_centres(T: np.ndarray, intra: np.ndarray) -> np.ndarray:
    """Centre coordinates whose distances, combined with the within-cluster
    spread, give average pairwise distances ``T`` (classical MDS)."""
    n = T.shape[0]
    if n == 1:
        return np.zeros((1, 1))
    sq = T**2 - 0.5 * (intra[:, None] ** 2 + intra[None, :] ** 2)
    np.fill_diagonal(sq, 0.0)
    if (sq < -1e-9).any():
        i, j = np.argwhere(sq < -1e-9)[0]
        raise ConfigError(
            f"infeasible geometry: gap {T[i, j]} is smaller than the intra-cluster distances"
        )
    sq = np.maximum(sq, 0.0)
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ sq @ J
    vals, vecs = np.linalg.eigh(B)
    scale = max(1.0, float(np.abs(vals).max()))
    if vals.min() < -1e-8 * scale:
        raise ConfigError("infeasible geometry: distances violate the triangle inequality")
    keep = vals > 1e-10 * scale
    if not keep.any():
        return np.zeros((n, 1))
    return vecs[:, keep] * np.sqrt(vals[keep])


def realize_geometry(geom: IdealGeometry, spread: float, seed: int = 0,
                     layout: str = "simplex") -> Dataset:
    """Sample a dataset whose clusters have the geometry's average distances.

    ``simplex``: every point owns an orthogonal axis scaled so that any two
    points of a cluster are exactly ``intra`` apart; cluster centres are
    embedded in a few extra axes and jittered with Gaussian noise of std
    ``spread``. Nearest-neighbour structure then matches the idealised picture
    up to the jitter (good for LOF).

    ``blob``: each cluster is an isotropic Gaussian whose root-mean-square
    pairwise distance is ``intra``, in ``max(geom.dims, #centre axes)``
    dimensions (good for axis-parallel splits).
    """
    if spread < 0:
        raise ConfigError("spread must be non-negative")
    if layout not in ("simplex", "blob"):
        raise ConfigError(f"unknown layout {layout!r}")
    clusters = geometry_clusters(geom)
    if not clusters:
        raise ConfigError("geometry has no points")
    for c in clusters:
        gap = geom.delta_a if c.group == "a" else geom.delta_b
        if len(clusters) > 1 and gap < c.intra:
            raise ConfigError(
                f"inlier-outlier gap {gap} below intra distance {c.intra} of {c.name}"
            )
    intra = np.array([c.intra for c in clusters])
    centres = _embed_centres(_target_distances(geom, clusters), intra)
    rng = np.random.default_rng(seed)
    sizes = np.array([c.size for c in clusters])
    n = int(sizes.sum())
    owner = np.repeat(np.arange(len(clusters)), sizes)
    r = centres.shape[1]

    if layout == "simplex":
        X = np.zeros((n, r + n))
        X[:, :r] = centres[owner] + rng.normal(0.0, spread, size=(n, r)) if spread else centres[owner]
        X[np.arange(n), r + np.arange(n)] = intra[owner] / math.sqrt(2.0)
    else:
        h = max(geom.dims, r)
        X = np.zeros((n, h))
        X[:, :r] = centres[owner]
        sigma = intra[owner] / math.sqrt(2.0 * h)
        X += rng.normal(size=(n, h)) * sigma[:, None]

    group = np.array([c.group for c in clusters])[owner]
    y = np.array([int(c.outlier) for c in clusters])[owner]
    spans, start = [], 0
    for c in clusters:
        spans.append({"name": c.name, "start": start, "size": c.size})
        start += c.size
    meta = {
        "seed": seed,
        "scenario": "geometry",
        "geometry": geom.to_dict(),
        "layout": layout,
        "spread": spread,
        "clusters": spans,
    }
    return Dataset(
        features=X,
        group=group,
        true_group=group,
        y=y,
        roles=(FeatureRole.INCRIMINATING,) * X.shape[1],
        meta=meta,
    )


def cluster_means(ds: Dataset, scores: np.ndarray) -> dict[str, float]:
    return {
        c["name"]: float(np.mean(scores[c["start"]:c["start"] + c["size"]]))
        for c in ds.meta["clusters"]
    }


def _mean_of(means: dict[str, float], prefix: str) -> float:
    vals = [v for k, v in means.items() if k.startswith(prefix)]
    return float(np.mean(vals))


@dataclass
class BridgeResult:
    claim: str
    predicted: str | None
    observed: str
    values: dict[str, float]

    @property
    def agrees(self) -> bool:
        return self.predicted is not None and self.predicted == self.observed


def default_spread(geom: IdealGeometry) -> float:
    """Five percent of the smallest distance in the geometry."""
    dists = [geom.d, geom.D, geom.delta_a, geom.delta_b]
    dists += [x for x in (geom.delta_g, geom.d_out, geom.D_out) if x]
    return 0.05 * min(dists)


def bridge(claim: str, geom: IdealGeometry, seed: int = 0, spread: float | None = None,
           atol: float = 0.05) -> BridgeResult:
    """Run the matching detector on a realised geometry and read off the ordering.

    LOF claims (lemma1, 1, 3, 5) compare mean scores of the relevant clusters;
    iTree claims (2, 4) compare group flag rates of a full forest flagging the
    true number of outliers. ``atol`` is the relative margin under which two
    empirical means count as equal.
    """
    claim = str(claim)
    if claim not in CHECKS:
        raise ConfigError(f"unknown claim {claim!r}")
    pred = CHECKS[claim](geom)
    spread = default_spread(geom) if spread is None else spread

    def cmp(x, y, left, right):
        if abs(x - y) <= atol * max(abs(x), abs(y)):
            return "equal"
        return left if x > y else right

    if claim in ("2", "4"):
        ds = realize_geometry(geom, spread, seed, layout="blob")
        scores = iforest_score(ds, IForestConfig(seed=seed))
        report = group_report(flag_top_k(scores, int(ds.y.sum())), ds)
        fr_a, fr_b = report.rate("fr", "a"), report.rate("fr", "b")
        return BridgeResult(claim, pred.verdict, cmp(fr_b, fr_a, "b", "a"),
                            {"fr_a": fr_a, "fr_b": fr_b})

    ds = realize_geometry(geom, spread, seed, layout="simplex")
    means = cluster_means(ds, lof_score(ds, LofConfig(k=geom.k)))
    if claim in ("lemma1", "lemma2"):
        grp = "a" if claim == "lemma1" else "b"
        out = _mean_of(means, f"{grp}_outlier")
        inl = _mean_of(means, f"{grp}_inlier")
        observed = "outliers" if out > (1.0 + atol) * inl else "masked"
        return BridgeResult(claim, pred.verdict, observed, {"outlier": out, "inlier": inl})
    a_out = _mean_of(means, "a_outlier")
    b_out = _mean_of(means, "b_outlier")
    values = {"a_outlier": a_out, "b_outlier": b_out, **means}
    if claim == "3":
        return BridgeResult(claim, pred.verdict, cmp(b_out, a_out, "b", "a"), values)
    return BridgeResult(claim, pred.verdict, cmp(a_out, b_out, "a", "b"), values)


def prop3_inversion_observed(ds: Dataset, scores: np.ndarray, geom: IdealGeometry) -> bool:
    """Do inlier micro-clusters smaller than the outlier ones get the higher mean LOF?"""
    means = cluster_means(ds, scores)
    inl, out = _b_subpops(geom)
    small_out = min(out)
    small_in = [means[f"b_inlier_{j}"] for j, s in enumerate(inl) if s < small_out]
    if not small_in:
        return False
    return float(np.mean(small_in)) > _mean_of(means, "b_outlier")


def with_k(geom: IdealGeometry, k: int) -> IdealGeometry:
    return replace(geom, k=k)

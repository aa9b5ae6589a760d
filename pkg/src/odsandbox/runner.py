"""Scenario sweeps: simulate, inject, tune, score, flag, evaluate, aggregate, plot.

Randomness is keyed, never sequential:

* the unbiased sample of repeat ``r`` uses ``derive_seed(master, mode, "sim", r)``
  and the injector ``derive_seed(master, bias, "inject", r)``, so every beta of
  one repeat starts from the same population and removal sets are nested;
* detector cells use ``derive_seed(master, bias, beta_index, detector, r)``.

Cells can therefore run in any order (or in worker processes) and the
output files are byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .autoencoder import DeepHP, FairHP
from .bias import BiasKind, BiasSpec, SamplingMode, apply_bias
from .datagen import ConfigError, Dataset, SimConfig, simulate
from .detectors import ALL_DETECTORS, DetectorKind, config_from_dict, config_to_dict, fit_score
from .io import dump_json, fmt, parse_float, read_rows, write_rows
from .metrics import MetricReport, flag_top_k, group_report
from .plots import render_plots
from .seeding import derive_seed
from .tuning import HpGrid, TuneResult, tune_fairod, tune_standard

DEFAULT_BETAS = {
    "none": (0.0,),
    "size": (0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8),
    "underrep": (0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8),
    "variance": (0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 6.0),
    "mean": (0.0, 2.0, 4.0, 6.0, 8.0),
    "obfuscation": (0.05, 0.1, 0.15, 0.2, 0.3, 0.4),
    "base_rate": (100, 80, 60, 40, 20),
}
MEASUREMENT_BIASES = ("variance", "mean")
MEASUREMENT_OUTLIER_MEAN = 10.0
TUNING_MODES = ("full", "published", "off")

METRIC_COLUMNS = [
    "auroc", "f1", "fr_a", "fr_b", "tpr_a", "tpr_b", "fpr_a", "fpr_b",
    "ppv_a", "ppv_b", "fr_ratio", "tpr_ratio", "fpr_ratio", "ppv_ratio", "bias_amp",
]
RUN_COLUMNS = (
    ["run_id", "scenario", "outlier_mode", "beta_index", "beta", "detector", "repeat", "seed"]
    + METRIC_COLUMNS
    + ["hp", "train_seed", "base_hp", "base_seed", "error"]
)
AGGREGATE_COLUMNS = ["scenario", "outlier_mode", "beta", "detector", "metric", "n", "mean", "std"]


@dataclass(frozen=True)
class SweepPlan:
    """One scenario swept over a beta grid.

    ``tuning`` is ``full`` (every grid, per dataset), ``published`` (deep
    detectors choose only among the configurations reported for this
    scenario; shallow grids stay full) or ``off`` (use ``fixed``).
    For ``bias = base_rate`` the betas are group-b outlier counts; group a
    receives the rest of the outlier total.
    """

    outlier_mode: str = "clustered"
    bias: str = "size"
    betas: tuple[float, ...] | None = None
    detectors: tuple[str, ...] = tuple(d.value for d in ALL_DETECTORS)
    repeats_shallow: int = 10
    repeats_deep: int = 5
    seed: int = 0
    tuning: str = "published"
    sampling_mode: str = "exact"
    grouping: str = "true"
    fairod_grouping: str = "reported"
    sim: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "bias", BiasKind(self.bias).value)
        betas = DEFAULT_BETAS[self.bias] if self.betas is None else self.betas
        object.__setattr__(self, "betas", tuple(float(b) for b in betas))
        object.__setattr__(self, "detectors", tuple(DetectorKind(d).value for d in self.detectors))
        self.validate()

    def validate(self) -> None:
        if not self.betas:
            raise ConfigError("beta grid is empty")
        if self.repeats_shallow < 1 or self.repeats_deep < 1:
            raise ConfigError("repeats must be >= 1")
        if self.tuning not in TUNING_MODES:
            raise ConfigError(f"tuning must be one of {TUNING_MODES}")
        if self.grouping not in ("true", "reported") or self.fairod_grouping not in ("true", "reported"):
            raise ConfigError("grouping must be 'true' or 'reported'")
        if not self.detectors:
            raise ConfigError("no detectors requested")
        SamplingMode(self.sampling_mode)
        self.sim_config(0)
        for beta in self.betas:
            self.bias_spec(beta, 0)

    @property
    def scenario(self) -> str:
        return f"{self.outlier_mode}-{self.bias}"

    def sim_config(self, seed: int) -> SimConfig:
        params: dict[str, Any] = {"outlier_mode": self.outlier_mode}
        if self.bias in MEASUREMENT_BIASES:
            params["culprit_outlier_mean"] = MEASUREMENT_OUTLIER_MEAN
        params.update(self.sim)
        params["seed"] = seed
        return SimConfig.from_dict(params)

    def bias_spec(self, beta: float, seed: int) -> BiasSpec:
        if self.bias == "base_rate":
            total = 2 * self.sim_config(0).outliers_per_group
            b = int(round(beta))
            return BiasSpec(kind="base_rate", outliers_a=total - b, outliers_b=b, seed=seed)
        return BiasSpec(kind=self.bias, beta=beta, mode=self.sampling_mode, seed=seed)

    def repeats_for(self, detector: str) -> int:
        return self.repeats_deep if DetectorKind(detector).is_deep else self.repeats_shallow

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["betas"] = list(self.betas)
        out["detectors"] = list(self.detectors)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SweepPlan":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown plan keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("betas", "detectors"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass
class RunRecord:
    run_id: str
    scenario: str
    outlier_mode: str
    beta_index: int
    beta: float
    detector: str
    repeat: int
    seed: int
    report: MetricReport | None
    hp: dict | None = None
    train_seed: int | None = None
    base_hp: dict | None = None
    base_seed: int | None = None
    error: str | None = None

    def row(self) -> dict:
        out = {
            "run_id": self.run_id,
            "scenario": self.scenario,
            "outlier_mode": self.outlier_mode,
            "beta_index": self.beta_index,
            "beta": self.beta,
            "detector": self.detector,
            "repeat": self.repeat,
            "seed": self.seed,
            "hp": None if self.hp is None else json.dumps(self.hp, sort_keys=True),
            "train_seed": self.train_seed,
            "base_hp": None if self.base_hp is None else json.dumps(self.base_hp, sort_keys=True),
            "base_seed": self.base_seed,
            "error": self.error,
        }
        if self.report is not None:
            out.update(self.report.flat())
        return out


def run_id(plan: SweepPlan, beta_index: int, detector: str, repeat: int) -> str:
    return f"{plan.scenario}:{beta_index}:{detector}:{repeat}"


def cell_seed(plan: SweepPlan, beta_index: int, detector: str, repeat: int) -> int:
    return derive_seed(plan.seed, plan.bias, beta_index, detector, repeat)


def build_dataset(plan: SweepPlan, beta_index: int, repeat: int) -> Dataset:
    base = simulate(plan.sim_config(derive_seed(plan.seed, plan.outlier_mode, "sim", repeat)))
    spec = plan.bias_spec(plan.betas[beta_index], derive_seed(plan.seed, plan.bias, "inject", repeat))
    return apply_bias(base, spec)


def _fixed_config(plan: SweepPlan, kind: DetectorKind):
    given = plan.fixed.get(kind.value)
    if kind is DetectorKind.LOF:
        return config_from_dict(kind, given or {"k": 20})
    if kind is DetectorKind.IFOREST:
        return config_from_dict(kind, given or {})
    if kind is DetectorKind.DEEPAE:
        return DeepHP.from_dict(given) if given else DeepHP()
    if given:
        return FairHP.from_dict(given)
    base = plan.fixed.get("deepae")
    return FairHP(base=DeepHP.from_dict(base) if base else DeepHP(), alpha=0.5, gamma=0.5)


def _grid(plan: SweepPlan, kind: DetectorKind, beta: float, base: DeepHP | None = None) -> HpGrid:
    if plan.tuning == "off":
        config = _fixed_config(plan, kind)
        if kind is DetectorKind.FAIROD and base is not None:
            config = dataclasses.replace(config, base=base)
        return HpGrid(kind, [config])
    if plan.tuning == "published":
        return HpGrid.published(kind, plan.outlier_mode, plan.bias, beta, base=base)
    return HpGrid.default(kind, base=base)


def _deep_base(plan: SweepPlan, ds: Dataset, beta_index: int, repeat: int) -> TuneResult:
    seed = cell_seed(plan, beta_index, DetectorKind.DEEPAE.value, repeat)
    return tune_standard(ds, _grid(plan, DetectorKind.DEEPAE, plan.betas[beta_index]), seed)


def evaluate(plan: SweepPlan, ds: Dataset, scores: np.ndarray) -> MetricReport:
    flags = flag_top_k(scores, int(ds.y.sum()))
    return group_report(flags, ds, grouping=plan.grouping, scores=scores)


def run_unit(plan: SweepPlan, beta_index: int, repeat: int) -> list[RunRecord]:
    """Every detector on the dataset of one (beta, repeat) pair."""
    beta = plan.betas[beta_index]
    records: list[RunRecord] = []
    try:
        ds = build_dataset(plan, beta_index, repeat)
    except Exception as exc:  # noqa: BLE001
        ds, data_error = None, f"{type(exc).__name__}: {exc}"
    deep: TuneResult | None = None
    for det in plan.detectors:
        if repeat >= plan.repeats_for(det):
            continue
        kind = DetectorKind(det)
        rec = RunRecord(
            run_id=run_id(plan, beta_index, det, repeat),
            scenario=plan.scenario,
            outlier_mode=plan.outlier_mode,
            beta_index=beta_index,
            beta=beta,
            detector=det,
            repeat=repeat,
            seed=cell_seed(plan, beta_index, det, repeat),
            report=None,
        )
        records.append(rec)
        if ds is None:
            rec.error = data_error
            continue
        try:
            if kind is DetectorKind.FAIROD:
                if deep is None:
                    deep = _deep_base(plan, ds, beta_index, repeat)
                if deep.scores is None:
                    raise RuntimeError("base DeepAE run failed for every configuration")
                grid = _grid(plan, kind, beta, base=deep.best)
                result = tune_fairod(ds, grid, deep.best_seed, base_scores=deep.scores,
                                     grouping=plan.fairod_grouping)
                rec.base_hp = config_to_dict(deep.best)
                rec.base_seed = deep.best_seed
            elif kind is DetectorKind.DEEPAE:
                deep = result = _deep_base(plan, ds, beta_index, repeat)
            else:
                result = tune_standard(ds, _grid(plan, kind, beta), rec.seed)
            rec.hp = config_to_dict(result.best)
            rec.train_seed = result.best_seed
            if result.scores is None:
                errors = [r.error for r in result.leaderboard if r.error]
                raise RuntimeError(errors[0] if errors else "no configuration produced scores")
            rec.report = evaluate(plan, ds, result.scores)
        except Exception as exc:  # noqa: BLE001 - recorded, the sweep goes on
            rec.error = f"{type(exc).__name__}: {exc}"
    return records


def _run_unit_star(args):
    return run_unit(*args)


def run_all(plan: SweepPlan, jobs: int = 1) -> list[RunRecord]:
    units = [
        (plan, bi, r)
        for bi in range(len(plan.betas))
        for r in range(max(plan.repeats_for(d) for d in plan.detectors))
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_unit_star, units))
    else:
        chunks = [run_unit(*u) for u in units]
    records = [rec for chunk in chunks for rec in chunk]
    order = {d: i for i, d in enumerate(plan.detectors)}
    records.sort(key=lambda r: (r.beta_index, order[r.detector], r.repeat))
    return records


def aggregate(records: list[RunRecord]) -> list[dict]:
    """Mean and sample std per (beta, detector, metric) over defined values."""
    cells: dict[tuple, list] = {}
    keys: list[tuple] = []
    for rec in records:
        key = (rec.scenario, rec.outlier_mode, rec.beta_index, rec.beta, rec.detector)
        if key not in cells:
            cells[key] = []
            keys.append(key)
        cells[key].append(rec)
    rows = []
    for key in sorted(keys, key=lambda k: (k[2], k[4])):
        scenario, mode, _, beta, det = key
        flats = [r.report.flat() for r in cells[key] if r.report is not None]
        for metric in METRIC_COLUMNS:
            vals = [f[metric] for f in flats if f[metric] is not None]
            rows.append({
                "scenario": scenario,
                "outlier_mode": mode,
                "beta": beta,
                "detector": det,
                "metric": metric,
                "n": len(vals),
                "mean": float(np.mean(vals)) if vals else None,
                "std": float(np.std(vals, ddof=1)) if len(vals) > 1 else (0.0 if vals else None),
            })
    return rows


@dataclass
class SweepResult:
    plan: SweepPlan
    records: list[RunRecord]
    aggregate: list[dict]
    out_dir: Path | None = None

    @property
    def failed(self) -> list[RunRecord]:
        return [r for r in self.records if r.error]

    def mean(self, detector: str, metric: str, beta: float) -> float | None:
        for row in self.aggregate:
            if row["detector"] == detector and row["metric"] == metric and math.isclose(row["beta"], beta):
                return row["mean"]
        raise KeyError((detector, metric, beta))


def run_sweep(plan: SweepPlan, out_dir: str | Path | None = None, jobs: int = 1,
              plots: bool = True) -> SweepResult:
    records = run_all(plan, jobs)
    agg = aggregate(records)
    result = SweepResult(plan, records, agg)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "runs.csv", RUN_COLUMNS, (r.row() for r in records))
        write_rows(out / "aggregate.csv", AGGREGATE_COLUMNS, agg)
        if plots:
            render_plots(agg, out / "plots")
        (out / "provenance.txt").write_text(provenance_text(plan, records))
        dump_json(plan.to_dict(), out / "plan.json")
        result.out_dir = out
    return result


def provenance_text(plan: SweepPlan, records: list[RunRecord]) -> str:
    lines = [
        f"odsandbox {__version__}",
        f"python {platform.python_version()}",
        f"numpy {np.__version__}",
        f"runs {len(records)}",
        f"failed {sum(1 for r in records if r.error)}",
        "seed derivation: master XOR blake2b-64(repr(keys)); "
        "sim=(mode,'sim',repeat) inject=(bias,'inject',repeat) cell=(bias,beta_index,detector,repeat)",
        "plan:",
        json.dumps(plan.to_dict(), indent=2, sort_keys=True),
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- replay

def find_record(runs_csv: str | Path, rid: str) -> dict[str, str]:
    for row in read_rows(runs_csv):
        if row["run_id"] == rid:
            return row
    raise KeyError(f"no run {rid!r} in {runs_csv}")


def replay(plan: SweepPlan, row: dict[str, str]) -> MetricReport:
    """Recompute one run from its provenance fields alone."""
    beta_index = int(row["beta_index"])
    repeat = int(row["repeat"])
    kind = DetectorKind(row["detector"])
    if not row["hp"]:
        raise ConfigError(f"run {row['run_id']} has no recorded configuration")
    ds = build_dataset(plan, beta_index, repeat)
    config = config_from_dict(kind, json.loads(row["hp"]))
    seed = int(row["train_seed"])
    base_scores = None
    if kind is DetectorKind.FAIROD:
        base = DeepHP.from_dict(json.loads(row["base_hp"]))
        base_scores = fit_score(DetectorKind.DEEPAE, ds, base, int(row["base_seed"]))
    scores = fit_score(kind, ds, config, seed, base_scores=base_scores, grouping=plan.fairod_grouping)
    return evaluate(plan, ds, scores)


def replay_matches(report: MetricReport, row: dict[str, str]) -> bool:
    flat = report.flat()
    return all(fmt(flat[c]) == row[c] for c in METRIC_COLUMNS)


def record_values(row: dict[str, str]) -> dict[str, float | None]:
    return {c: parse_float(row[c]) for c in METRIC_COLUMNS}

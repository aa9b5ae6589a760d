"""Command-line entry point: ``odsandbox <command> ...``.

Every command reads and writes plain files (CSV data, JSON configs), so the
pipeline can be run one stage at a time or as a whole with ``sweep``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .autoencoder import ae_score, ae_train, fairod_train
from .bias import BiasKind, BiasSpec, SamplingMode, apply_bias
from .datagen import ConfigError, SimConfig, simulate
from .detectors import DetectorKind, config_from_dict, config_to_dict, fit_score
from .iforest import IForestConfig
from .io import (
    dump_json, load_json, read_dataset, read_scores, sidecar_path,
    write_dataset, write_rows, write_scores,
)
from .lof import LofConfig
from .metrics import flag_top_k, group_report
from .runner import METRIC_COLUMNS, SweepPlan, find_record, replay, replay_matches, run_sweep
from .theory import CHECKS, IdealGeometry, bridge
from .tuning import HpGrid, tune_fairod, tune_standard

REPORT_COLUMNS = ["scenario", "beta", "detector", "seed"] + METRIC_COLUMNS


def parse_params(text: str | None) -> dict[str, str]:
    """``"k=20"`` or ``"trees=100,sub=256"`` -> dict."""
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"malformed parameter {item!r}; expected key=value")
        out[key.strip()] = value.strip()
    return out


def detector_config(kind: DetectorKind, param: str | None, hp_file: str | None):
    if kind is DetectorKind.LOF:
        params = parse_params(param)
        return LofConfig(k=int(params.get("k", 20)))
    if kind is DetectorKind.IFOREST:
        params = parse_params(param)
        return IForestConfig(n_trees=int(params.get("trees", 100)),
                             subsample=int(params.get("sub", 256)))
    if hp_file is None:
        raise ConfigError(f"{kind.value} needs --hp <json file>")
    return config_from_dict(kind, load_json(hp_file))


def cmd_simulate(args) -> int:
    cfg = SimConfig.from_dict(load_json(args.config)) if args.config else SimConfig()
    if args.seed is not None:
        cfg = SimConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    write_dataset(simulate(cfg), args.out)
    return 0


def cmd_inject(args) -> int:
    ds = read_dataset(args.inp)
    if args.bias == BiasKind.BASE_RATE.value:
        spec = BiasSpec(kind=args.bias, outliers_a=args.outliers_a, outliers_b=args.outliers_b,
                        seed=args.seed)
    else:
        spec = BiasSpec(kind=args.bias, beta=args.beta, mode=args.mode, seed=args.seed)
    write_dataset(apply_bias(ds, spec), args.out)
    return 0


def cmd_fit_score(args) -> int:
    kind = DetectorKind(args.detector)
    ds = read_dataset(args.inp)
    config = detector_config(kind, args.param, args.hp)
    if kind.is_deep:
        model = (ae_train(ds, config, args.seed) if kind is DetectorKind.DEEPAE
                 else fairod_train(ds, config, args.seed, grouping=args.grouping))
        scores = ae_score(model, ds)
        if args.model:
            model.save(args.model)
    else:
        scores = fit_score(kind, ds, config, args.seed)
    write_scores(args.out, ds.row_id, scores)
    dump_json({"detector": kind.value, "seed": args.seed, "config": config_to_dict(config),
               "scenario": ds.scenario, "beta": ds.meta.get("beta")}, sidecar_path(args.out))
    return 0


def cmd_evaluate(args) -> int:
    ds = read_dataset(args.data)
    rows, scores = read_scores(args.scores)
    if len(rows) != ds.n or (rows != ds.row_id).any():
        raise ConfigError("score rows do not match the dataset rows")
    side = sidecar_path(args.scores)
    info = load_json(side) if side.exists() else {}
    report = group_report(flag_top_k(scores, int(ds.y.sum())), ds, grouping=args.grouping,
                          scores=scores)
    row = {"scenario": ds.scenario, "beta": ds.meta.get("beta"),
           "detector": info.get("detector"), "seed": info.get("seed"), **report.flat()}
    write_rows(args.out, REPORT_COLUMNS, [row])
    return 0


def cmd_tune(args) -> int:
    kind = DetectorKind(args.detector)
    ds = read_dataset(args.inp)
    if kind is DetectorKind.FAIROD:
        base = DetectorKind.DEEPAE
        deep = tune_standard(ds, HpGrid.default(base), args.seed)
        result = tune_fairod(ds, HpGrid.default(kind, base=deep.best), deep.best_seed,
                             base_scores=deep.scores, grouping=args.grouping)
    else:
        result = tune_standard(ds, HpGrid.default(kind), args.seed)
    columns = ["index", "config", "seed", "auroc", "fold_fr", "fold_tpr", "distance", "error", "best"]
    write_rows(args.out, columns, [
        {**vars(r), "config": json.dumps(r.config, sort_keys=True),
         "best": int(r.index == result.best_index)}
        for r in result.leaderboard
    ])
    return 0


def cmd_theory_check(args) -> int:
    geom = IdealGeometry.from_dict(load_json(args.geom)) if args.geom else IdealGeometry()
    pred = CHECKS[args.prop](geom)
    rows = [{"claim": pred.claim, "item": f"value:{k}", "value": v} for k, v in pred.values.items()]
    rows += [{"claim": pred.claim, "item": f"premise:{k}", "value": int(v)} for k, v in pred.premises.items()]
    rows += [{"claim": pred.claim, "item": f"flag:{k}", "value": int(v)} for k, v in pred.flags.items()]
    rows.append({"claim": pred.claim, "item": "verdict", "value": pred.verdict})
    if args.bridge_seeds:
        for seed in range(args.bridge_seeds):
            res = bridge(args.prop, geom, seed=seed)
            rows.append({"claim": pred.claim, "item": f"observed:seed{seed}", "value": res.observed})
    write_rows(args.out, ["claim", "item", "value"], rows)
    return 0


def cmd_sweep(args) -> int:
    plan = SweepPlan.from_dict(load_json(args.plan)) if args.plan else SweepPlan()
    result = run_sweep(plan, args.out, jobs=args.jobs)
    for rec in result.failed:
        print(f"failed {rec.run_id}: {rec.error}", file=sys.stderr)
    return 2 if result.failed else 0


def cmd_replay(args) -> int:
    runs = Path(args.runs)
    row = find_record(runs, args.record)
    plan_path = Path(args.plan) if args.plan else runs.parent / "plan.json"
    plan = SweepPlan.from_dict(load_json(plan_path))
    report = replay(plan, row)
    ok = replay_matches(report, row)
    print(json.dumps({"run_id": args.record, "matches": ok, **report.flat()}, indent=2))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="odsandbox", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw an unbiased two-group dataset")
    s.add_argument("--config", help="JSON SimConfig; defaults when omitted")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("inject", help="apply one bias to a dataset")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--bias", required=True, choices=[b.value for b in BiasKind])
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--outliers-a", type=int)
    s.add_argument("--outliers-b", type=int)
    s.add_argument("--mode", default="exact", choices=[m.value for m in SamplingMode])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_inject)

    s = sub.add_parser("fit-score", help="fit a detector and score every row")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--detector", required=True, choices=[d.value for d in DetectorKind])
    s.add_argument("--param", help="k=<n> for lof; trees=<n>,sub=<n> for iforest")
    s.add_argument("--hp", help="JSON hyperparameters for deepae/fairod")
    s.add_argument("--grouping", default="reported", choices=["true", "reported"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--model", help="save the trained network (.npz)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit_score)

    s = sub.add_parser("evaluate", help="flag the top scores and report group metrics")
    s.add_argument("--scores", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--grouping", default="true", choices=["true", "reported"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("tune", help="grid-search one detector and write the leaderboard")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--detector", required=True, choices=[d.value for d in DetectorKind])
    s.add_argument("--grouping", default="reported", choices=["true", "reported"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_tune)

    s = sub.add_parser("theory-check", help="evaluate a closed-form claim on a geometry")
    s.add_argument("--prop", required=True, choices=sorted(CHECKS))
    s.add_argument("--geom", help="JSON IdealGeometry; defaults when omitted")
    s.add_argument("--bridge-seeds", type=int, default=0,
                   help="also realise the geometry this many times and record the observed ordering")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_theory_check)

    s = sub.add_parser("sweep", help="run a full scenario sweep")
    s.add_argument("--plan", help="JSON SweepPlan")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("replay", help="recompute one run of a sweep and compare")
    s.add_argument("--record", required=True, help="run_id from runs.csv")
    s.add_argument("--runs", default="runs.csv")
    s.add_argument("--plan", help="plan JSON; defaults to plan.json next to runs.csv")
    s.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

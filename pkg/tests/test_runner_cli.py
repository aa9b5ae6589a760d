import csv
import json

import numpy as np
import pytest

from odsandbox.cli import main
from odsandbox.datagen import ConfigError, SimConfig, simulate
from odsandbox.io import read_dataset, read_rows, write_dataset
from odsandbox.plots import line_chart_svg, render_plots
from odsandbox.runner import (
    AGGREGATE_COLUMNS, DEFAULT_BETAS, RUN_COLUMNS, SweepPlan, find_record, replay,
    replay_matches, run_sweep,
)


def small_plan(**kw):
    base = dict(bias="size", betas=(0.01, 0.4), detectors=("lof", "iforest"),
                repeats_shallow=2, repeats_deep=1, seed=11, sim={"n_per_group": 200})
    base.update(kw)
    return SweepPlan(**base)


def test_plan_defaults_and_validation():
    plan = SweepPlan(bias="size")
    assert plan.betas == DEFAULT_BETAS["size"] and plan.repeats_shallow == 10 and plan.repeats_deep == 5
    assert SweepPlan(bias="variance").sim_config(0).culprit_outlier_mean == 10.0
    assert SweepPlan(bias="mean").sim_config(0).culprit_outlier_mean == 10.0
    with pytest.raises(ConfigError):
        SweepPlan(bias="size", betas=(1.2,))
    with pytest.raises(ConfigError):
        SweepPlan(repeats_shallow=0)
    with pytest.raises(ConfigError):
        SweepPlan.from_dict({"bias": "size", "nope": 1})
    assert SweepPlan.from_dict(plan.to_dict()) == plan


def test_sweep_outputs_and_record_count(tmp_path):
    plan = small_plan()
    res = run_sweep(plan, tmp_path)
    assert len(res.records) == 2 * 2 * 2
    with open(tmp_path / "runs.csv") as fh:
        header = next(csv.reader(fh))
    assert header == RUN_COLUMNS
    agg = read_rows(tmp_path / "aggregate.csv")
    assert list(agg[0]) == AGGREGATE_COLUMNS
    assert len(list((tmp_path / "plots").glob("*.svg"))) == 2 * 5
    assert (tmp_path / "provenance.txt").read_text().startswith("odsandbox")


def test_record_count_for_full_size_grid():
    plan = SweepPlan(bias="size")
    expected = sum(plan.repeats_for(d) for d in plan.detectors) * len(plan.betas)
    assert expected == 7 * (10 + 10 + 5 + 5)


def test_parallel_equals_serial(tmp_path):
    plan = small_plan()
    run_sweep(plan, tmp_path / "s", jobs=1)
    run_sweep(plan, tmp_path / "p", jobs=2)
    for name in ("runs.csv", "aggregate.csv"):
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_unbiased_ratios_near_one():
    plan = SweepPlan(bias="none", detectors=("lof", "iforest"), repeats_shallow=4, seed=2)
    res = run_sweep(plan, plots=False)
    for det in ("lof", "iforest"):
        for metric in ("fr_ratio", "tpr_ratio"):
            assert abs(res.mean(det, metric, 0.0) - 1.0) <= 0.15


def test_replay_reproduces_rows(tmp_path):
    plan = small_plan(detectors=("lof", "iforest", "deepae", "fairod"), tuning="off",
                      fixed={"deepae": {"epochs": 3}, "fairod": {"epochs": 3, "alpha": 0.2, "gamma": 0.2}})
    run_sweep(plan, tmp_path)
    rows = read_rows(tmp_path / "runs.csv")
    for rid in ("clustered-size:1:iforest:1", "clustered-size:0:fairod:0", "clustered-size:1:lof:0"):
        row = find_record(tmp_path / "runs.csv", rid)
        assert replay_matches(replay(plan, row), row)
    assert all(r["error"] == "" for r in rows)


def test_cell_errors_are_recorded():
    plan = small_plan(tuning="off", fixed={"lof": {"k": 5000}}, detectors=("lof",))
    res = run_sweep(plan, plots=False)
    assert res.failed and all("ConfigError" in r.error for r in res.failed)


def test_plots_handle_gaps_and_single_points():
    svg = line_chart_svg("t", {"a": [(0.0, 0.1, 0.0), (1.0, None, None), (2.0, 0.3, 0.1)],
                               "b": [(0.0, 0.2, None)]})
    assert svg.startswith("<svg") and svg.count("<polyline") == 3
    one = line_chart_svg("t", {"all": [(0.5, 0.9, 0.0)]})
    assert "<circle" in one
    with pytest.raises(ValueError):
        render_plots([], "unused")


def test_dataset_csv_round_trip(tmp_path):
    ds = simulate(SimConfig(n_per_group=30, seed=1))
    write_dataset(ds, tmp_path / "d.csv")
    back = read_dataset(tmp_path / "d.csv")
    assert back.identical_to(ds) and back.meta == ds.meta
    (tmp_path / "d.csv.meta.json").unlink()
    bare = read_dataset(tmp_path / "d.csv")
    assert bare.roles == ds.roles and np.array_equal(bare.features, ds.features)


def test_cli_pipeline(tmp_path, capsys):
    d, b, s, r = (str(tmp_path / n) for n in ("d.csv", "b.csv", "s.csv", "r.csv"))
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"n_per_group": 100, "seed": 3}))
    assert main(["simulate", "--config", str(cfg), "--out", d]) == 0
    assert main(["inject", "--in", d, "--bias", "underrep", "--beta", "0.4", "--seed", "1", "--out", b]) == 0
    assert main(["fit-score", "--in", b, "--detector", "lof", "--param", "k=40", "--seed", "0", "--out", s]) == 0
    assert main(["evaluate", "--scores", s, "--data", b, "--out", r]) == 0
    row = read_rows(r)[0]
    assert row["detector"] == "lof" and row["scenario"] == "underrep" and float(row["beta"]) == 0.4
    hp = tmp_path / "hp.json"
    hp.write_text(json.dumps({"num_layers": 2, "epochs": 2}))
    model = tmp_path / "m.npz"
    assert main(["fit-score", "--in", b, "--detector", "deepae", "--hp", str(hp), "--seed", "1",
                 "--out", s, "--model", str(model)]) == 0
    assert model.exists()
    lb = str(tmp_path / "lb.csv")
    assert main(["tune", "--in", b, "--detector", "lof", "--out", lb]) == 0
    assert len(read_rows(lb)) == 25
    assert main(["inject", "--in", d, "--bias", "size", "--beta", "1.5", "--out", b]) == 1


def test_cli_theory_sweep_replay(tmp_path, capsys):
    geom = tmp_path / "g.json"
    geom.write_text(json.dumps({"d": 1.0, "D": 3.0, "k": 150}))
    out = tmp_path / "v.csv"
    assert main(["theory-check", "--prop", "1", "--geom", str(geom), "--out", str(out)]) == 0
    rows = {r["item"]: r["value"] for r in read_rows(out)}
    assert rows["verdict"] == "a" and float(rows["value:a_outlier"]) == 4.0
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps(small_plan().to_dict()))
    assert main(["sweep", "--plan", str(plan), "--out", str(tmp_path / "sw")]) == 0
    capsys.readouterr()
    assert main(["replay", "--record", "clustered-size:0:lof:1", "--runs", str(tmp_path / "sw" / "runs.csv")]) == 0
    assert json.loads(capsys.readouterr().out)["matches"] is True
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**small_plan().to_dict(), "tuning": "off", "fixed": {"lof": {"k": 9999}},
                               "detectors": ["lof"]}))
    assert main(["sweep", "--plan", str(bad), "--out", str(tmp_path / "bad")]) == 2

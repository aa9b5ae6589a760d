"""Audit LOF and iForest on one size-disparity dataset, end to end in memory."""

from odsandbox.bias import BiasSpec, apply_bias
from odsandbox.datagen import SimConfig, simulate
from odsandbox.metrics import flag_top_k, group_report
from odsandbox.tuning import HpGrid, tune_standard


def main():
    ds = apply_bias(simulate(SimConfig(seed=1)), BiasSpec("size", beta=0.8, seed=2))
    for det in ("lof", "iforest"):
        result = tune_standard(ds, HpGrid.default(det), seed=3)
        report = group_report(flag_top_k(result.scores, int(ds.y.sum())), ds, scores=result.scores)
        print(f"{det:8s} best={result.best}  AUROC={report.auroc:.3f}")
        for metric in ("fr", "tpr", "fpr", "ppv"):
            a, b = report.rate(metric, "a"), report.rate(metric, "b")
            print(f"    {metric:4s} a={a:.3f} b={b:.3f}")


if __name__ == "__main__":
    main()

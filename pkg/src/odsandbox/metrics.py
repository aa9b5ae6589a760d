"""Detection performance and group-fairness metrics.

Undefined quantities (a rate with an empty denominator, a ratio with an
undefined term) are ``None``; they are never folded into NaN arithmetic.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .datagen import GROUPS, Dataset


class UndefinedMetricError(ValueError):
    """The metric has no value for this input (e.g. a single-class label vector)."""


def flag_top_k(scores, k_true: int) -> np.ndarray:
    """Flag the ``k_true`` highest scores; ties at the cut go to the lower row index."""
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    if not 0 <= k_true <= n:
        raise ValueError(f"k_true must lie in [0, {n}], got {k_true}")
    order = np.lexsort((np.arange(n), -scores))
    flags = np.zeros(n, dtype=bool)
    flags[order[:k_true]] = True
    return flags


def auroc(scores, y) -> float:
    """Probability that a random positive outranks a random negative (ties count 1/2)."""
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(y).astype(bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def confusion(flags, y) -> dict[str, int]:
    flags = np.asarray(flags).astype(bool)
    y = np.asarray(y).astype(bool)
    return {
        "tp": int((flags & y).sum()),
        "fp": int((flags & ~y).sum()),
        "fn": int((~flags & y).sum()),
        "tn": int((~flags & ~y).sum()),
    }


def f1_from_confusion(tp: int, fp: int, fn: int) -> float:
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def f1(flags, y) -> float:
    y = np.asarray(y)
    if not y.astype(bool).any():
        raise UndefinedMetricError("F1 is undefined without true positives to find")
    c = confusion(flags, y)
    return f1_from_confusion(c["tp"], c["fp"], c["fn"])


def _rate(num: int, den: int) -> float | None:
    return num / den if den else None


def _ratio(num: float | None, den: float | None) -> float | None:
    if num is None or den is None or den == 0:
        return None
    return num / den


@dataclass
class GroupRates:
    size: int
    positives: int
    flagged: int
    fr: float | None
    tpr: float | None
    fpr: float | None
    ppv: float | None


@dataclass
class MetricReport:
    auroc: float | None
    f1: float | None
    groups: dict[str, GroupRates]
    fr_ratio: float | None
    tpr_ratio: float | None
    fpr_ratio: float | None
    ppv_ratio: float | None
    bias_amp: float | None = None
    grouping: str = "true"

    def rate(self, metric: str, group: str) -> float | None:
        return getattr(self.groups[group], metric)

    def flat(self) -> dict[str, float | None]:
        """One flat row in the report CSV column order."""
        row = {"auroc": self.auroc, "f1": self.f1}
        for metric in ("fr", "tpr", "fpr", "ppv"):
            for g in GROUPS:
                row[f"{metric}_{g}"] = self.rate(metric, g)
        row.update(
            fr_ratio=self.fr_ratio,
            tpr_ratio=self.tpr_ratio,
            fpr_ratio=self.fpr_ratio,
            ppv_ratio=self.ppv_ratio,
            bias_amp=self.bias_amp,
        )
        return row

    def to_dict(self) -> dict:
        return asdict(self)


def group_rates(flags, y, mask) -> GroupRates:
    flags = np.asarray(flags).astype(bool)[mask]
    y = np.asarray(y).astype(bool)[mask]
    c = confusion(flags, y)
    size = int(mask.sum())
    positives = c["tp"] + c["fn"]
    flagged = c["tp"] + c["fp"]
    return GroupRates(
        size=size,
        positives=positives,
        flagged=flagged,
        fr=_rate(flagged, size),
        tpr=_rate(c["tp"], positives),
        fpr=_rate(c["fp"], size - positives),
        ppv=_rate(c["tp"], flagged),
    )


def group_report(flags, ds: Dataset, grouping: str = "true", scores=None) -> MetricReport:
    """Per-group FR/TPR/FPR/PPV plus a/b ratios for one flag vector.

    ``scores`` (optional) adds the overall AUROC; F1 is computed from the flags.
    Bias amplification compares the FR ratio with the observed base-rate ratio
    under the same grouping.
    """
    labels = ds.groups(grouping)
    flags = np.asarray(flags).astype(bool)
    if flags.shape != (ds.n,):
        raise ValueError(f"flags have shape {flags.shape}, expected ({ds.n},)")
    groups = {}
    for g in GROUPS:
        mask = labels == g
        if not mask.any():
            raise ValueError(f"group {g!r} is empty under {grouping} grouping")
        groups[g] = group_rates(flags, ds.y, mask)
    a, b = groups["a"], groups["b"]
    report = MetricReport(
        auroc=None,
        f1=f1(flags, ds.y) if ds.y.any() else None,
        groups=groups,
        fr_ratio=_ratio(a.fr, b.fr),
        tpr_ratio=_ratio(a.tpr, b.tpr),
        fpr_ratio=_ratio(a.fpr, b.fpr),
        ppv_ratio=_ratio(a.ppv, b.ppv),
        grouping=grouping,
    )
    if scores is not None:
        try:
            report.auroc = auroc(scores, ds.y)
        except UndefinedMetricError:
            report.auroc = None
    report.bias_amp = bias_amplification(report, a.positives / a.size, b.positives / b.size)
    return report


def bias_amplification(report: MetricReport, br_a: float, br_b: float) -> float | None:
    """(fr_a / fr_b) / (br_a / br_b); ``None`` whenever a denominator vanishes."""
    return _ratio(report.fr_ratio, _ratio(br_a, br_b))


def fold_ratio(r: float | None) -> float | None:
    """min(r, 1/r): distance-from-parity that ignores the direction of disparity."""
    if r is None:
        return None
    if r <= 0:
        return 0.0
    return min(r, 1.0 / r)

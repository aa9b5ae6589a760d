"""Static SVG line charts of aggregated sweep metrics.

One chart per (detector, metric): x is beta, group-wise rates get one line
per group and AUROC a single line, each with a +-1 std band. Undefined
means break the line. Output is a pure function of the aggregate rows.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

PLOT_METRICS = ("fr", "tpr", "fpr", "ppv", "auroc")
SERIES_COLORS = {"a": "#1f77b4", "b": "#d62728", "all": "#2ca02c"}
METRIC_TITLES = {
    "fr": "flag rate",
    "tpr": "true positive rate",
    "fpr": "false positive rate",
    "ppv": "precision",
    "auroc": "AUROC",
}

WIDTH, HEIGHT = 480, 320
LEFT, RIGHT, TOP, BOTTOM = 60, 20, 36, 48


def _num(x: float) -> str:
    return f"{x:.2f}"


def _series(rows: list[dict], detector: str, metric: str) -> dict[str, list[tuple]]:
    """Map series label -> sorted [(beta, mean, std)] with None for undefined."""
    names = {"all": "auroc"} if metric == "auroc" else {g: f"{metric}_{g}" for g in ("a", "b")}
    out: dict[str, list[tuple]] = {}
    for label, column in names.items():
        pts = [
            (float(r["beta"]), r["mean"], r["std"])
            for r in rows
            if r["detector"] == detector and r["metric"] == column
        ]
        out[label] = sorted(pts, key=lambda p: p[0])
    return out


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _runs(points: list[tuple]) -> list[list[tuple]]:
    """Split a series into maximal runs of defined points."""
    runs, cur = [], []
    for p in points:
        if p[1] is None:
            if cur:
                runs.append(cur)
            cur = []
        else:
            cur.append(p)
    if cur:
        runs.append(cur)
    return runs


def line_chart_svg(title: str, series: dict[str, list[tuple]], x_label: str = "beta") -> str:
    xs = sorted({p[0] for pts in series.values() for p in pts})
    defined = [p for pts in series.values() for p in pts if p[1] is not None]
    x_lo, x_hi = (xs[0], xs[-1]) if xs else (0.0, 1.0)
    if defined:
        y_lo = min(p[1] - (p[2] or 0.0) for p in defined)
        y_hi = max(p[1] + (p[2] or 0.0) for p in defined)
    else:
        y_lo, y_hi = 0.0, 1.0
    y_lo, y_hi = min(y_lo, 0.0), max(y_hi, 1e-9)
    if math.isclose(y_lo, y_hi):
        y_hi = y_lo + 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x: float) -> float:
        return LEFT + (pw / 2 if x_hi == x_lo else (x - x_lo) / (x_hi - x_lo) * pw)

    def sy(y: float) -> float:
        return TOP + ph - (y - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
        f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(x_label)}</text>',
    ]
    for x in xs:
        parts.append(
            f'<text x="{_num(sx(x))}" y="{TOP + ph + 16}" text-anchor="middle">{x:g}</text>'
        )
    for y in _ticks(y_lo, y_hi):
        parts.append(
            f'<text x="{LEFT - 6}" y="{_num(sy(y) + 4)}" text-anchor="end">{y:.3g}</text>'
        )
        parts.append(
            f'<line x1="{LEFT}" y1="{_num(sy(y))}" x2="{LEFT + pw}" y2="{_num(sy(y))}" '
            f'stroke="#ddd"/>'
        )
    for label, pts in series.items():
        color = SERIES_COLORS[label]
        for run in _runs(pts):
            upper = [(sx(x), sy(m + (s or 0.0))) for x, m, s in run]
            lower = [(sx(x), sy(m - (s or 0.0))) for x, m, s in reversed(run)]
            band = " ".join(f"{_num(a)},{_num(b)}" for a, b in upper + lower)
            parts.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.15" stroke="none"/>')
            line = " ".join(f"{_num(sx(x))},{_num(sy(m))}" for x, m, _ in run)
            parts.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
            for x, m, _ in run:
                parts.append(f'<circle cx="{_num(sx(x))}" cy="{_num(sy(m))}" r="3" fill="{color}"/>')
    for i, label in enumerate(series):
        y = TOP + 4 + 14 * i
        name = "AUROC" if label == "all" else f"group {label}"
        parts.append(
            f'<rect x="{LEFT + pw - 70}" y="{y}" width="10" height="10" fill="{SERIES_COLORS[label]}"/>'
        )
        parts.append(f'<text x="{LEFT + pw - 56}" y="{y + 9}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_plots(rows: list[dict], out_dir: str | Path) -> list[Path]:
    """Write ``{detector}_{metric}.svg`` for every detector in the aggregate."""
    if not rows:
        raise ValueError("aggregate table is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    detectors = list(dict.fromkeys(r["detector"] for r in rows))
    written = []
    for det in detectors:
        for metric in PLOT_METRICS:
            svg = line_chart_svg(f"{det}: {METRIC_TITLES[metric]}", _series(rows, det, metric))
            path = out / f"{det}_{metric}.svg"
            path.write_text(svg)
            written.append(path)
    return written

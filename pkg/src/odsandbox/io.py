"""CSV/JSON persistence for datasets, scores and reports.

Dataset CSV: ``row,group,true_group,y`` followed by one column per feature
named by role prefix and position (``g1..``, ``c1..``, ``o1..``). Everything
needed to rebuild the ``Dataset`` exactly (metadata, roles, generative
centres) goes into a JSON sidecar at ``<csv path>.meta.json``. Floats are
written with ``repr`` so they round-trip bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .datagen import Dataset, FeatureRole

DATA_HEAD = ["row", "group", "true_group", "y"]


def fmt(value: Any) -> str:
    """Stable text form of one CSV cell; ``None`` and NaN become empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def parse_float(text: str) -> float | None:
    return None if text == "" else float(text)


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dump_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def load_json(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_dataset(ds: Dataset, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATA_HEAD + ds.column_names())
        for i in range(ds.n):
            w.writerow(
                [int(ds.row_id[i]), ds.group[i], ds.true_group[i], int(ds.y[i])]
                + [repr(float(v)) for v in ds.features[i]]
            )
    dump_json(
        {
            "meta": ds.meta,
            "roles": [r.value for r in ds.roles],
            "centers": None if ds.centers is None else ds.centers,
        },
        sidecar_path(path),
    )


def read_dataset(path: str | Path) -> Dataset:
    """Load a dataset CSV; the sidecar is optional (roles then come from column prefixes)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if header[:4] != DATA_HEAD:
        raise ValueError(f"{path}: header must start with {','.join(DATA_HEAD)}")
    feature_names = header[4:]
    side = sidecar_path(path)
    extra = load_json(side) if side.exists() else {}
    roles = extra.get("roles") or [FeatureRole.from_prefix(name[0]).value for name in feature_names]
    centers = extra.get("centers")
    return Dataset(
        features=np.array([[float(v) for v in r[4:]] for r in rows], dtype=float).reshape(len(rows), -1),
        group=np.array([r[1] for r in rows]),
        true_group=np.array([r[2] for r in rows]),
        y=np.array([int(r[3]) for r in rows]),
        roles=tuple(FeatureRole(r) for r in roles),
        meta=extra.get("meta", {}),
        centers=None if centers is None else np.asarray(centers, dtype=float),
        row_id=np.array([int(r[0]) for r in rows]),
    )


def write_scores(path: str | Path, row_ids: Iterable[int], scores: Iterable[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "score"])
        for r, s in zip(row_ids, scores):
            w.writerow([int(r), repr(float(s))])


def read_scores(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        pairs = [(int(r["row"]), float(r["score"])) for r in reader]
    rows = np.array([p[0] for p in pairs], dtype=np.int64)
    return rows, np.array([p[1] for p in pairs], dtype=float)


def write_rows(path: str | Path, columns: list[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])


def read_rows(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

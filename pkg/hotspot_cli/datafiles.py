"""
Readers and writers for the files exchanged between stages.

All tables are plain CSV with a header row; floats are written in shortest round-trip
form so a stage that reads another stage's output sees exactly the same numbers.
"""

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from hotspot_cli.errors import InputParseError
from hotspot_cli.grid import CellVariable, EventPoint, GridSpec, grid_polygons
from hotspot_cli.globalstats import GlobalStatResult
from hotspot_cli.localstats import LocalStatRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CELLS_COLUMNS = [
    "cell_id", "row", "col", "crash_count", "highg_count",
    "gi_star", "gi_p", "hotspot_class", "bv_moran", "bv_lag", "bv_p", "lisa_quadrant",
]


def _format_float(value: float) -> str:
    return repr(float(value))


def _write_frame(frame: pd.DataFrame, path: PathLike) -> None:
    """CSV with '\\n' line endings and repr floats, identical on every platform."""
    lines = [",".join(frame.columns)]
    for record in frame.itertuples(index=False, name=None):
        cells = []
        for value in record:
            if value is None or (isinstance(value, float) and math.isnan(value)):
                cells.append("")
            elif isinstance(value, (bool, np.bool_)):
                cells.append("True" if value else "False")
            elif isinstance(value, (float, np.floating)):
                cells.append(_format_float(value))
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_frame(path: PathLike, required: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise InputParseError(path, None, "file not found")
    try:
        frame = pd.read_csv(path, encoding="utf-8", dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputParseError(path, None, f"malformed CSV: {e}")
    except pd.errors.EmptyDataError:
        raise InputParseError(path, 1, "empty file, expected a header row")
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise InputParseError(path, 1, f"missing columns {missing}")
    return frame


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def _numeric(frame: pd.DataFrame, column: str, path: PathLike, integer: bool = False) -> np.ndarray:
    # float() parses repr output exactly; pandas' fast parser may be off by an ulp.
    values = np.array([_to_float(v) for v in frame[column]], dtype=float)
    bad = ~np.isfinite(values)
    if integer:
        bad |= np.isfinite(values) & (values % 1 != 0)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        # Line 1 is the header.
        raise InputParseError(path, k + 2, f"{column}={frame[column].iloc[k]!r} is not a valid number")
    return values


def read_points(path: PathLike, require_kind: bool = False) -> List[EventPoint]:
    """
    Read a point CSV with columns x, y and optional kind.

    Raises:
        InputParseError: Naming the file and line of the first bad row
    """
    required = ["x", "y"] + (["kind"] if require_kind else [])
    frame = _read_frame(path, required)
    xs = _numeric(frame, "x", path)
    ys = _numeric(frame, "y", path)
    if "kind" in frame.columns:
        kinds = [k.strip() for k in frame["kind"]]
        if require_kind:
            empty = [k for k, v in enumerate(kinds) if not v]
            if empty:
                raise InputParseError(path, empty[0] + 2, "kind is empty")
        return [EventPoint(float(x), float(y), k) for x, y, k in zip(xs, ys, kinds)]
    return [EventPoint(float(x), float(y)) for x, y in zip(xs, ys)]


def point_arrays(points: Sequence[EventPoint]) -> Tuple[np.ndarray, np.ndarray]:
    xs = np.fromiter((p.x for p in points), dtype=float, count=len(points))
    ys = np.fromiter((p.y for p in points), dtype=float, count=len(points))
    return xs, ys


def write_points(points: Iterable[EventPoint], path: PathLike, with_kind: bool = False) -> None:
    if with_kind:
        frame = pd.DataFrame([(p.kind, p.x, p.y) for p in points], columns=["kind", "x", "y"])
    else:
        frame = pd.DataFrame([(p.x, p.y) for p in points], columns=["x", "y"])
    _write_frame(frame, path)


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(data: Dict, path: PathLike) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path: PathLike) -> Dict:
    path = Path(path)
    if not path.exists():
        raise InputParseError(path, None, "file not found")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputParseError(path, e.lineno, f"invalid JSON: {e.msg}")


def write_grid(g: GridSpec, path: PathLike, bbox: Optional[Sequence[float]] = None) -> None:
    data = g.to_dict()
    if bbox is not None:
        data["bbox"] = [float(v) for v in bbox]
    write_json(data, path)


def read_grid(path: PathLike) -> GridSpec:
    return GridSpec.from_dict(read_json(path))


def write_counts(g: GridSpec, crashes: CellVariable, highg: CellVariable, path: PathLike) -> None:
    rows, cols = np.divmod(np.arange(g.n_cells), g.n_cols)
    frame = pd.DataFrame({
        "cell_id": np.arange(g.n_cells),
        "row": rows,
        "col": cols,
        "crash_count": crashes.values.astype(np.int64),
        "highg_count": highg.values.astype(np.int64),
    })
    _write_frame(frame, path)


def read_counts(path: PathLike, g: Optional[GridSpec] = None) -> Tuple[CellVariable, CellVariable]:
    frame = _read_frame(path, ["cell_id", "crash_count", "highg_count"])
    ids = _numeric(frame, "cell_id", path, integer=True).astype(np.int64)
    if not np.array_equal(ids, np.arange(len(ids))):
        k = int(np.flatnonzero(ids != np.arange(len(ids)))[0])
        raise InputParseError(path, k + 2, "cell_id must run 0..n-1 in order")
    crashes = CellVariable("crash_count", _numeric(frame, "crash_count", path))
    highg = CellVariable("highg_count", _numeric(frame, "highg_count", path))
    if g is not None:
        crashes.check_grid(g)
    return crashes, highg


def write_global_stats(results: Sequence[GlobalStatResult], path: PathLike) -> None:
    frame = pd.DataFrame([r.to_row() for r in results],
                         columns=["name", "statistic", "expected", "pseudo_p", "permutations", "seed"])
    _write_frame(frame, path)


def write_gi_star(rows: Sequence[LocalStatRow], path: PathLike) -> None:
    frame = pd.DataFrame({
        "cell_id": [r.cell_id for r in rows],
        "gi_star": [r.statistic for r in rows],
        "gi_p": [r.pseudo_p for r in rows],
        "hotspot_class": [r.category for r in rows],
        "degenerate": [r.degenerate for r in rows],
    })
    _write_frame(frame, path)


def write_local_moran(rows: Sequence[LocalStatRow], path: PathLike, prefix: str) -> None:
    """Moran-family rows as cell_id,{prefix}_moran,{prefix}_lag,{prefix}_focal,{prefix}_p."""
    frame = pd.DataFrame({
        "cell_id": [r.cell_id for r in rows],
        f"{prefix}_moran": [r.statistic for r in rows],
        f"{prefix}_lag": [r.lag for r in rows],
        f"{prefix}_focal": [r.focal for r in rows],
        f"{prefix}_p": [r.pseudo_p for r in rows],
    })
    _write_frame(frame, path)


def read_gi_star(path: PathLike) -> List[LocalStatRow]:
    frame = _read_frame(path, ["cell_id", "gi_star", "gi_p", "hotspot_class", "degenerate"])
    ids = _numeric(frame, "cell_id", path, integer=True).astype(int)
    stat = _numeric(frame, "gi_star", path)
    p = _numeric(frame, "gi_p", path)
    degenerate = frame["degenerate"].str.strip() == "True"
    return [
        LocalStatRow(int(i), float(s), 0.0, 0.0, float(pv), c, degenerate=bool(d))
        for i, s, pv, c, d in zip(ids, stat, p, frame["hotspot_class"], degenerate)
    ]


def read_local_moran(path: PathLike, prefix: str) -> List[LocalStatRow]:
    cols = [f"{prefix}_moran", f"{prefix}_lag", f"{prefix}_focal", f"{prefix}_p"]
    frame = _read_frame(path, ["cell_id"] + cols)
    ids = _numeric(frame, "cell_id", path, integer=True).astype(int)
    stat, lag, focal = (_numeric(frame, c, path) for c in cols[:3])
    p_text = frame[cols[3]].str.strip()
    isolate = (p_text == "").to_numpy()
    p = np.array([_to_float(v) for v in p_text], dtype=float)
    rows = []
    for k in range(len(ids)):
        if isolate[k]:
            rows.append(LocalStatRow(int(ids[k]), 0.0, 0.0, float(focal[k]), None, "NotApplicable", isolate=True))
        elif not np.isfinite(p[k]):
            raise InputParseError(path, k + 2, f"{cols[3]}={p_text.iloc[k]!r} is not a valid number")
        else:
            rows.append(LocalStatRow(int(ids[k]), float(stat[k]), float(lag[k]), float(focal[k]), float(p[k]),
                                     "NotSignificant"))
    return rows


def cells_frame(
    g: GridSpec,
    crashes: CellVariable,
    highg: CellVariable,
    gi_rows: Sequence[LocalStatRow],
    hotspot_classes: Sequence[str],
    bv_rows: Sequence[LocalStatRow],
    quadrants: Sequence[str],
) -> pd.DataFrame:
    rows, cols = np.divmod(np.arange(g.n_cells), g.n_cols)
    return pd.DataFrame({
        "cell_id": np.arange(g.n_cells),
        "row": rows,
        "col": cols,
        "crash_count": crashes.values.astype(np.int64),
        "highg_count": highg.values.astype(np.int64),
        "gi_star": [r.statistic for r in gi_rows],
        "gi_p": [r.pseudo_p for r in gi_rows],
        "hotspot_class": list(hotspot_classes),
        "bv_moran": [r.statistic for r in bv_rows],
        "bv_lag": [r.lag for r in bv_rows],
        "bv_p": [r.pseudo_p for r in bv_rows],
        "lisa_quadrant": list(quadrants),
    }, columns=CELLS_COLUMNS)


def write_cells(frame: pd.DataFrame, path: PathLike) -> None:
    _write_frame(frame, path)


def read_cells(path: PathLike) -> pd.DataFrame:
    frame = _read_frame(path, ["cell_id", "lisa_quadrant"])
    frame["cell_id"] = _numeric(frame, "cell_id", path, integer=True).astype(np.int64)
    return frame


def write_group_sizes(sizes: Sequence[Tuple[str, int]], path: PathLike, labels: Optional[Dict[str, str]] = None) -> None:
    records = []
    for name, count in sizes:
        record = {"class": name, "cells": int(count)}
        if labels is not None:
            record["description"] = labels.get(name, "")
        records.append(record)
    columns = ["class", "description", "cells"] if labels is not None else ["class", "cells"]
    _write_frame(pd.DataFrame(records, columns=columns), path)


def write_mann_whitney(results, path: PathLike) -> None:
    frame = pd.DataFrame([r.to_row() for r in results],
                         columns=["poi_type", "u_statistic", "p_value", "mean_group_a", "mean_group_b", "significant"])
    _write_frame(frame, path)


def write_geojson(g: GridSpec, properties: pd.DataFrame, path: PathLike, name: str) -> None:
    """
    One Polygon feature per cell carrying the frame's columns as properties.

    Coordinates are the grid's planar meters, passed through unmodified; RFC 7946
    structure otherwise (counter-clockwise exterior rings, closed).
    """
    rings = grid_polygons(g)
    records = properties.to_dict(orient="records")
    features = []
    for record in records:
        cell_id = int(record["cell_id"])
        clean = {}
        for key, value in record.items():
            if isinstance(value, (np.integer,)):
                value = int(value)
            elif isinstance(value, (np.floating, float)):
                value = None if math.isnan(value) else float(value)
            elif isinstance(value, np.bool_):
                value = bool(value)
            clean[key] = value
        features.append({
            "type": "Feature",
            "id": cell_id,
            "geometry": {"type": "Polygon", "coordinates": [[list(v) for v in rings[cell_id]]]},
            "properties": clean,
        })
    collection = {"type": "FeatureCollection", "name": name, "features": features}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(collection, f, separators=(",", ":"))
        f.write("\n")

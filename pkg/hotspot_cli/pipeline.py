"""
End-to-end hotspot analysis.

Each stage is a function the matching subcommand also calls, so running the stages one
by one through their intermediate files produces the same bytes as `run_pipeline`.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from hotspot_cli import __version__, datafiles
from hotspot_cli.characterize import MWResult, PoiFeatureMatrix, compare_groups, count_pois
from hotspot_cli.config import PipelineConfig
from hotspot_cli.errors import ValidationError
from hotspot_cli.globalstats import GlobalStatResult, global_bivariate_moran, global_moran
from hotspot_cli.grid import CellVariable, EventPoint, GridSpec, aggregate_xy, bbox_covering, make_grid
from hotspot_cli.localstats import (
    LISA_LABELS,
    HotspotClass,
    LisaQuadrant,
    LocalStatRow,
    bivariate_local_moran,
    classify_hotspots,
    classify_lisa,
    getis_ord_gstar,
    group_sizes,
    local_moran,
)
from hotspot_cli.weights import WeightsMatrix, contiguity_weights, include_self, row_standardize, write_weights_csv

logger = logging.getLogger(__name__)

GRID_JSON = "grid.json"
COUNTS_CSV = "counts.csv"
WEIGHTS_CSV = "weights.csv"
GRID_GEOJSON = "grid.geojson"
GLOBAL_CSV = "global_stats.csv"
GI_STAR_CSV = "gi_star.csv"
BIVARIATE_CSV = "bivariate.csv"
LOCAL_MORAN_CSV = "local_moran.csv"
CELLS_CSV = "cells.csv"
HOTSPOT_GROUPS_CSV = "hotspot_groups.csv"
LISA_GROUPS_CSV = "lisa_groups.csv"
HOTSPOTS_GEOJSON = "hotspots.geojson"
LISA_GEOJSON = "lisa.geojson"
MANN_WHITNEY_GLOB = "mann_whitney_*.csv"
MANIFEST_JSON = "manifest.json"

STAGE_ARTIFACTS = (
    GRID_JSON, COUNTS_CSV, GRID_GEOJSON, WEIGHTS_CSV, GLOBAL_CSV, GI_STAR_CSV, BIVARIATE_CSV,
    CELLS_CSV, HOTSPOT_GROUPS_CSV, LISA_GROUPS_CSV, HOTSPOTS_GEOJSON, LISA_GEOJSON,
)

LISA_GROUP_LABELS = {q.value: label for q, label in LISA_LABELS.items()}


@dataclass
class GridStage:
    grid: GridSpec
    bbox: Tuple[float, float, float, float]
    crashes: CellVariable
    highg: CellVariable


@dataclass
class ClassifyStage:
    cells: pd.DataFrame
    hotspot_sizes: List[Tuple[str, int]]
    lisa_sizes: List[Tuple[str, int]]


@dataclass
class Comparison:
    """Mann-Whitney results of one LISA group pair."""

    group_a: str
    group_b: str
    results: List[MWResult]

    @property
    def file_name(self) -> str:
        return mann_whitney_csv(self.group_a, self.group_b)


@dataclass
class PipelineResult:
    output_dir: Path
    grid: GridSpec
    global_stats: List[GlobalStatResult]
    hotspot_sizes: List[Tuple[str, int]]
    lisa_sizes: List[Tuple[str, int]]
    comparisons: List[Comparison] = field(default_factory=list)
    dropped: Dict[str, int] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)


def grid_stage(
    crash_points: Sequence[EventPoint],
    highg_points: Sequence[EventPoint],
    bbox: Optional[Sequence[float]],
    cell_size: float,
    threads: int = 1,
) -> GridStage:
    """Build the grid (from `bbox`, else covering every point) and aggregate both point sets."""
    cx, cy = datafiles.point_arrays(crash_points)
    hx, hy = datafiles.point_arrays(highg_points)
    if bbox is None:
        xs = np.concatenate([cx, hx])
        ys = np.concatenate([cy, hy])
        bbox = bbox_covering(xs, ys, cell_size)
        logger.info("derived bbox %s from %d points", bbox, len(xs))
    bbox = tuple(float(v) for v in bbox)
    g = make_grid(bbox, cell_size)
    crashes = aggregate_xy(cx, cy, g, name="crash_count", threads=threads)
    highg = aggregate_xy(hx, hy, g, name="highg_count", threads=threads)
    return GridStage(grid=g, bbox=bbox, crashes=crashes, highg=highg)


def write_grid_stage(stage: GridStage, out_dir: Path) -> None:
    g = stage.grid
    datafiles.write_grid(g, out_dir / GRID_JSON, bbox=stage.bbox)
    datafiles.write_counts(g, stage.crashes, stage.highg, out_dir / COUNTS_CSV)
    datafiles.write_geojson(g, _counts_properties(stage), out_dir / GRID_GEOJSON, "grid")


def _counts_properties(stage: GridStage) -> pd.DataFrame:
    g = stage.grid
    rows, cols = np.divmod(np.arange(g.n_cells), g.n_cols)
    return pd.DataFrame({
        "cell_id": np.arange(g.n_cells),
        "row": rows,
        "col": cols,
        "crash_count": stage.crashes.values.astype("int64"),
        "highg_count": stage.highg.values.astype("int64"),
    })


def binary_weights(g: GridSpec, kind: str) -> WeightsMatrix:
    return contiguity_weights(g, kind)


def global_stage(
    crashes: CellVariable,
    highg: CellVariable,
    binary: WeightsMatrix,
    permutations: int,
    seed: int,
    threads: int,
    alternative: str,
) -> List[GlobalStatResult]:
    """Moran's I of each count field and the bivariate Moran's I of crash x high-G."""
    W = row_standardize(binary)
    common = dict(permutations=permutations, seed=seed, threads=threads, alternative=alternative)
    return [
        global_moran(crashes.values, W, name="moran_crash", **common),
        global_moran(highg.values, W, name="moran_highg", **common),
        global_bivariate_moran(crashes.values, highg.values, W, name="bivariate_crash_highg", **common),
    ]


def gi_star_stage(
    x: CellVariable, binary: WeightsMatrix, permutations: int, seed: int, threads: int, alternative: str
) -> List[LocalStatRow]:
    return getis_ord_gstar(x.values, include_self(binary), permutations, seed, threads, alternative)


def local_moran_stage(
    x: CellVariable, binary: WeightsMatrix, permutations: int, seed: int, threads: int, alternative: str,
    alpha: float,
) -> List[LocalStatRow]:
    return local_moran(x.values, row_standardize(binary), permutations, seed, threads, alternative, alpha)


def bivariate_stage(
    crashes: CellVariable, highg: CellVariable, binary: WeightsMatrix, permutations: int, seed: int,
    threads: int, alternative: str, alpha: float,
) -> List[LocalStatRow]:
    return bivariate_local_moran(
        crashes.values, highg.values, row_standardize(binary), permutations, seed, threads, alternative, alpha
    )


def classify_stage(
    g: GridSpec,
    crashes: CellVariable,
    highg: CellVariable,
    gi_rows: Sequence[LocalStatRow],
    bv_rows: Sequence[LocalStatRow],
    lisa_alpha: float,
) -> ClassifyStage:
    """Join Gi* and bivariate LISA results per cell and count every class."""
    if len(gi_rows) != g.n_cells or len(bv_rows) != g.n_cells:
        raise ValidationError(
            f"expected {g.n_cells} rows per local statistic, got {len(gi_rows)} Gi* and {len(bv_rows)} LISA"
        )
    hotspot = [c.value for c in classify_hotspots(gi_rows)]
    quadrants = [q.value for q in classify_lisa(bv_rows, lisa_alpha)]
    cells = datafiles.cells_frame(g, crashes, highg, gi_rows, hotspot, bv_rows, quadrants)
    return ClassifyStage(
        cells=cells,
        hotspot_sizes=group_sizes(hotspot, list(HotspotClass)),
        lisa_sizes=group_sizes(quadrants, list(LisaQuadrant)),
    )


def write_classify_stage(g: GridSpec, stage: ClassifyStage, out_dir: Path) -> None:
    cells = stage.cells
    datafiles.write_cells(cells, out_dir / CELLS_CSV)
    datafiles.write_group_sizes(stage.hotspot_sizes, out_dir / HOTSPOT_GROUPS_CSV)
    datafiles.write_group_sizes(stage.lisa_sizes, out_dir / LISA_GROUPS_CSV, labels=LISA_GROUP_LABELS)
    hot = cells[["cell_id", "row", "col", "crash_count", "gi_star", "gi_p", "hotspot_class"]]
    datafiles.write_geojson(g, hot, out_dir / HOTSPOTS_GEOJSON, "hotspots")
    lisa = cells[["cell_id", "row", "col", "crash_count", "highg_count", "bv_moran", "bv_lag", "bv_p",
                  "lisa_quadrant"]].copy()
    lisa["lisa_label"] = [LISA_GROUP_LABELS[q] for q in lisa["lisa_quadrant"]]
    datafiles.write_geojson(g, lisa, out_dir / LISA_GEOJSON, "lisa")


def mann_whitney_csv(group_a: str, group_b: str) -> str:
    return f"mann_whitney_{group_a}_vs_{group_b}.csv"


def characterize_stage(
    g: GridSpec,
    poi_points: Sequence[EventPoint],
    quadrants: Sequence[str],
    group_a: str,
    groups_b: Sequence[str],
    alpha: float,
    threads: int = 1,
) -> Tuple[PoiFeatureMatrix, List[Comparison]]:
    """Count POIs per cell and compare `group_a` against every group in `groups_b`."""
    features = count_pois(poi_points, g)
    comparisons = [
        Comparison(group_a, group_b, compare_groups(features, quadrants, group_a, group_b, alpha, threads))
        for group_b in groups_b
    ]
    return features, comparisons


def write_comparisons(comparisons: Sequence[Comparison], out_dir: Path) -> List[str]:
    """Write one Mann-Whitney table per pair and remove tables of pairs no longer compared."""
    names = [c.file_name for c in comparisons]
    for stale in out_dir.glob(MANN_WHITNEY_GLOB):
        if stale.name not in names:
            stale.unlink()
    for comparison in comparisons:
        datafiles.write_mann_whitney(comparison.results, out_dir / comparison.file_name)
    return names


def _input_entry(path: str, points: int, dropped: int) -> Dict[str, object]:
    return {"path": path, "sha256": datafiles.sha256_file(path), "points": points, "dropped": dropped}


def run_pipeline(config: PipelineConfig, threads: int = 1) -> PipelineResult:
    """
    Run every stage in order and write the artifact bundle to `config.output_dir`.

    Raises:
        ValidationError: If an input path is missing from the config or a file fails to parse
        DegenerateInputError: If a count field is constant
    """
    for name in ("crashes", "highg"):
        if not getattr(config, name):
            raise ValidationError(f"no {name} file given (set it in the config or pass --{name})")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = dict(permutations=config.permutations, seed=config.seed, threads=threads,
                 alternative=config.alternative)

    crash_points = datafiles.read_points(config.crashes)
    highg_points = datafiles.read_points(config.highg)
    poi_points = datafiles.read_points(config.pois, require_kind=True) if config.pois else None

    logger.info("stage: grid")
    gs = grid_stage(crash_points, highg_points, config.bbox, config.cell_size, threads)
    g = gs.grid
    write_grid_stage(gs, out_dir)
    logger.info(gs.crashes.summary_line())
    logger.info(gs.highg.summary_line())

    logger.info("stage: weights")
    binary = binary_weights(g, config.weights)
    write_weights_csv(binary, out_dir / WEIGHTS_CSV)

    logger.info("stage: global")
    global_stats = global_stage(gs.crashes, gs.highg, binary, **stats)
    datafiles.write_global_stats(global_stats, out_dir / GLOBAL_CSV)

    logger.info("stage: local (Gi*)")
    gi_rows = gi_star_stage(gs.crashes, binary, **stats)
    datafiles.write_gi_star(gi_rows, out_dir / GI_STAR_CSV)

    logger.info("stage: bivariate LISA")
    bv_rows = bivariate_stage(gs.crashes, gs.highg, binary, alpha=config.lisa_alpha, **stats)
    datafiles.write_local_moran(bv_rows, out_dir / BIVARIATE_CSV, "bv")

    logger.info("stage: classify")
    cs = classify_stage(g, gs.crashes, gs.highg, gi_rows, bv_rows, config.lisa_alpha)
    write_classify_stage(g, cs, out_dir)

    result = PipelineResult(
        output_dir=out_dir,
        grid=g,
        global_stats=global_stats,
        hotspot_sizes=cs.hotspot_sizes,
        lisa_sizes=cs.lisa_sizes,
        dropped={"crashes": gs.crashes.dropped, "highg": gs.highg.dropped},
    )
    inputs = {
        "crashes": _input_entry(config.crashes, len(crash_points), gs.crashes.dropped),
        "highg": _input_entry(config.highg, len(highg_points), gs.highg.dropped),
    }

    if poi_points is not None:
        logger.info("stage: characterize")
        features, comparisons = characterize_stage(
            g, poi_points, list(cs.cells["lisa_quadrant"]), config.group_a, config.group_b,
            config.mw_alpha, threads,
        )
        result.comparisons = comparisons
        result.dropped["pois"] = features.dropped
        inputs["pois"] = _input_entry(config.pois, len(poi_points), features.dropped)

    # Also clears tables left over from an earlier run with other pairs or with POIs.
    outputs = list(STAGE_ARTIFACTS) + write_comparisons(result.comparisons, out_dir)
    result.artifacts = {name: datafiles.sha256_file(out_dir / name) for name in sorted(outputs)}
    manifest = {
        "tool": "hotspot-cli",
        "version": __version__,
        "parameters": config.model_dump(mode="json", exclude={"output_dir"}),
        "grid": {**g.to_dict(), "bbox": list(gs.bbox), "n_cells": g.n_cells},
        "inputs": inputs,
        "random_streams": {
            "global": "SeedSequence([seed, 0, replicate])",
            "local": "SeedSequence([seed, 1, cell_id])",
        },
        "mann_whitney": {
            "alpha": config.mw_alpha,
            "comparisons": [
                {"group_a": c.group_a, "group_b": c.group_b, "file": c.file_name, "n_tests": len(c.results)}
                for c in result.comparisons
            ],
        },
        "outputs": result.artifacts,
    }
    datafiles.write_json(manifest, out_dir / MANIFEST_JSON)
    logger.info("wrote %d artifacts to %s", len(outputs) + 1, out_dir)
    return result

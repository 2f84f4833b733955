"""
Stage commands: each runs one step of the pipeline through intermediate files.

Inputs default to the standard file names inside --out-dir, so the stages chain without
extra flags:

    hotspot-cli grid --crashes c.csv --highg h.csv
    hotspot-cli weights && hotspot-cli global && hotspot-cli local
    hotspot-cli bivariate && hotspot-cli classify && hotspot-cli characterize --pois p.csv
"""

from pathlib import Path
from typing import Any, Dict, Optional

import click
from rich.console import Group

from hotspot_cli import datafiles, pipeline
from hotspot_cli.errors import HotspotError, ValidationError
from hotspot_cli.localstats import HotspotClass, LisaQuadrant, group_sizes
from hotspot_cli.utils.console import (
    console,
    exit_with_error,
    format_details,
    format_global_table,
    format_groups_table,
    format_mann_whitney_table,
    print_json,
    print_success,
)
from hotspot_cli.utils.progress import show_operation_progress
from hotspot_cli.weights import read_weights_csv, write_weights_csv

QUADRANTS = ["HH", "HL", "LH", "LL"]


def out_dir_option(f):
    return click.option("--out-dir", "-o", type=click.Path(file_okay=False), default=None,
                        help="Directory for outputs and default inputs (default: config output_dir)")(f)


def inference_options(f):
    """--permutations, --seed and --alternative, defaulting to the effective config."""
    f = click.option("--alternative", type=click.Choice(["directional", "two-sided"]), default=None,
                     help="Pseudo p-value tail convention")(f)
    f = click.option("--seed", type=int, default=None, help="Base random seed (default 42)")(f)
    f = click.option("--permutations", "-k", type=click.IntRange(min=1), default=None,
                     help="Permutations per test (default 999)")(f)
    return f


def stage_config(ctx, **overrides):
    """Effective config for a stage plus its output directory (created if needed)."""
    config = ctx.obj.config(overrides)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return config, out_dir


def inference_args(ctx, config) -> Dict[str, Any]:
    return dict(
        permutations=config.permutations,
        seed=config.seed,
        threads=ctx.obj.resolve_threads(),
        alternative=config.alternative,
    )


def _input(path: Optional[str], out_dir: Path, default_name: str) -> Path:
    return Path(path) if path else out_dir / default_name


def _report(ctx, data: Dict[str, Any], table=None, message: Optional[str] = None) -> None:
    """Render a command summary in the selected output format."""
    output_format = ctx.obj.output_format
    if output_format == "json":
        print_json(data)
    elif output_format == "compact":
        for key, value in data.items():
            if not isinstance(value, (dict, list)):
                click.echo(f"{key}={value}")
    else:
        if table is not None:
            console.print(table)
        if message:
            print_success(message)


@click.command(name="grid")
@click.option("--crashes", type=click.Path(dir_okay=False), help="Crash points CSV (x,y)")
@click.option("--highg", type=click.Path(dir_okay=False), help="High-G event points CSV (x,y)")
@click.option("--bbox", type=float, nargs=4, default=None, metavar="MINX MINY MAXX MAXY",
              help="Study area in projected meters (default: cover all points)")
@click.option("--cell-size", type=float, default=None, help="Cell edge in meters (default 400)")
@out_dir_option
@click.pass_context
def grid_command(ctx, crashes, highg, bbox, cell_size, out_dir):
    """Build the grid and aggregate crash and high-G points per cell."""
    try:
        config, out = stage_config(ctx, crashes=crashes, highg=highg, bbox=bbox or None,
                                   cell_size=cell_size, output_dir=out_dir)
        if not config.crashes or not config.highg:
            raise ValidationError("both --crashes and --highg are required")
        crash_points = datafiles.read_points(config.crashes)
        highg_points = datafiles.read_points(config.highg)
        stage = pipeline.grid_stage(crash_points, highg_points, config.bbox, config.cell_size,
                                    ctx.obj.resolve_threads())
        pipeline.write_grid_stage(stage, out)
    except HotspotError as e:
        exit_with_error(e)

    g = stage.grid
    data = {
        "n_rows": g.n_rows,
        "n_cols": g.n_cols,
        "n_cells": g.n_cells,
        "cell_size": g.cell_size,
        "bbox": list(stage.bbox),
        "crashes_in_extent": int(stage.crashes.total),
        "crashes_dropped": stage.crashes.dropped,
        "highg_in_extent": int(stage.highg.total),
        "highg_dropped": stage.highg.dropped,
    }
    if ctx.obj.output_format == "table":
        console.print(stage.crashes.summary_line())
        console.print(stage.highg.summary_line())
    _report(ctx, data, format_details(data, title=f"Grid {g.n_rows}x{g.n_cols}"),
            f"Wrote {pipeline.GRID_JSON}, {pipeline.COUNTS_CSV} and {pipeline.GRID_GEOJSON} to {out}")


@click.command(name="weights")
@click.option("--grid", "grid_path", type=click.Path(dir_okay=False), help="grid.json from the grid stage")
@click.option("--kind", type=click.Choice(["queen", "rook"]), default=None, help="Contiguity (default queen)")
@out_dir_option
@click.pass_context
def weights_command(ctx, grid_path, kind, out_dir):
    """Build binary contiguity weights and export them as i,j,w rows."""
    try:
        config, out = stage_config(ctx, weights=kind, output_dir=out_dir)
        g = datafiles.read_grid(_input(grid_path, out, pipeline.GRID_JSON))
        W = pipeline.binary_weights(g, config.weights)
        write_weights_csv(W, out / pipeline.WEIGHTS_CSV)
    except HotspotError as e:
        exit_with_error(e)

    cards = W.cardinalities
    data = {
        "kind": config.weights,
        "n_cells": W.n,
        "links": int(W.matrix.nnz),
        "min_neighbors": int(cards.min()),
        "max_neighbors": int(cards.max()),
        "isolates": int(W.isolates.sum()),
    }
    _report(ctx, data, format_details(data, title="Contiguity weights"),
            f"Wrote {out / pipeline.WEIGHTS_CSV}")


@click.command(name="global")
@click.option("--counts", type=click.Path(dir_okay=False), help="counts.csv from the grid stage")
@click.option("--weights", "weights_path", type=click.Path(dir_okay=False), help="weights.csv")
@inference_options
@out_dir_option
@click.pass_context
def global_command(ctx, counts, weights_path, permutations, seed, alternative, out_dir):
    """Global Moran's I of both count fields and their bivariate Moran's I."""
    try:
        config, out = stage_config(ctx, permutations=permutations, seed=seed, alternative=alternative,
                                   output_dir=out_dir)
        crashes, highg = datafiles.read_counts(_input(counts, out, pipeline.COUNTS_CSV))
        W = read_weights_csv(_input(weights_path, out, pipeline.WEIGHTS_CSV), len(crashes))
        results = show_operation_progress(
            pipeline.global_stage, "Running global permutation tests...", "Global statistics done",
            "Global statistics failed", crashes, highg, W, **inference_args(ctx, config),
        )
        datafiles.write_global_stats(results, out / pipeline.GLOBAL_CSV)
    except HotspotError as e:
        exit_with_error(e)

    rows = [r.to_row() for r in results]
    _report(ctx, {"global_stats": rows, **{r["name"]: r["statistic"] for r in rows}},
            format_global_table(rows), f"Wrote {out / pipeline.GLOBAL_CSV}")


@click.command(name="local")
@click.option("--counts", type=click.Path(dir_okay=False), help="counts.csv from the grid stage")
@click.option("--weights", "weights_path", type=click.Path(dir_okay=False), help="weights.csv")
@click.option("--statistic", type=click.Choice(["gi_star", "moran"]), default="gi_star", show_default=True,
              help="Local statistic")
@click.option("--variable", type=click.Choice(["crash_count", "highg_count"]), default="crash_count",
              show_default=True, help="Count field to analyze")
@click.option("--lisa-alpha", type=float, default=None, help="Quadrant significance level (moran only)")
@inference_options
@out_dir_option
@click.pass_context
def local_command(ctx, counts, weights_path, statistic, variable, lisa_alpha, permutations, seed,
                  alternative, out_dir):
    """Getis-Ord Gi* hotspots (default) or univariate local Moran."""
    try:
        config, out = stage_config(ctx, permutations=permutations, seed=seed, alternative=alternative,
                                   lisa_alpha=lisa_alpha, output_dir=out_dir)
        crashes, highg = datafiles.read_counts(_input(counts, out, pipeline.COUNTS_CSV))
        x = crashes if variable == "crash_count" else highg
        W = read_weights_csv(_input(weights_path, out, pipeline.WEIGHTS_CSV), len(x))
        args = inference_args(ctx, config)
        if statistic == "gi_star":
            rows = show_operation_progress(
                pipeline.gi_star_stage, f"Gi* over {len(x)} cells...", "Gi* done", "Gi* failed", x, W, **args,
            )
            target = out / pipeline.GI_STAR_CSV
            datafiles.write_gi_star(rows, target)
            categories = list(HotspotClass)
        else:
            rows = show_operation_progress(
                pipeline.local_moran_stage, f"Local Moran over {len(x)} cells...", "Local Moran done",
                "Local Moran failed", x, W, alpha=config.lisa_alpha, **args,
            )
            target = out / pipeline.LOCAL_MORAN_CSV
            datafiles.write_local_moran(rows, target, "lm")
            categories = list(LisaQuadrant)
    except HotspotError as e:
        exit_with_error(e)

    sizes = group_sizes([r.category for r in rows], categories)
    _report(ctx, {"statistic": statistic, "variable": variable, "n_cells": len(rows), "groups": dict(sizes)},
            format_groups_table(sizes, f"{statistic} classes of {variable}"), f"Wrote {target}")


@click.command(name="bivariate")
@click.option("--counts", type=click.Path(dir_okay=False), help="counts.csv from the grid stage")
@click.option("--weights", "weights_path", type=click.Path(dir_okay=False), help="weights.csv")
@click.option("--lisa-alpha", type=float, default=None, help="Quadrant significance level (default 0.05)")
@inference_options
@out_dir_option
@click.pass_context
def bivariate_command(ctx, counts, weights_path, lisa_alpha, permutations, seed, alternative, out_dir):
    """Bivariate local Moran of crash counts against high-G counts."""
    try:
        config, out = stage_config(ctx, permutations=permutations, seed=seed, alternative=alternative,
                                   lisa_alpha=lisa_alpha, output_dir=out_dir)
        crashes, highg = datafiles.read_counts(_input(counts, out, pipeline.COUNTS_CSV))
        W = read_weights_csv(_input(weights_path, out, pipeline.WEIGHTS_CSV), len(crashes))
        rows = show_operation_progress(
            pipeline.bivariate_stage, f"Bivariate LISA over {len(crashes)} cells...", "Bivariate LISA done",
            "Bivariate LISA failed", crashes, highg, W, alpha=config.lisa_alpha, **inference_args(ctx, config),
        )
        datafiles.write_local_moran(rows, out / pipeline.BIVARIATE_CSV, "bv")
    except HotspotError as e:
        exit_with_error(e)

    sizes = group_sizes([r.category for r in rows], list(LisaQuadrant))
    _report(ctx, {"n_cells": len(rows), "groups": dict(sizes)},
            format_groups_table(sizes, "Bivariate LISA quadrants", pipeline.LISA_GROUP_LABELS),
            f"Wrote {out / pipeline.BIVARIATE_CSV}")


@click.command(name="classify")
@click.option("--grid", "grid_path", type=click.Path(dir_okay=False), help="grid.json")
@click.option("--counts", type=click.Path(dir_okay=False), help="counts.csv")
@click.option("--gi-star", "gi_path", type=click.Path(dir_okay=False), help="gi_star.csv from `local`")
@click.option("--bivariate", "bv_path", type=click.Path(dir_okay=False), help="bivariate.csv")
@click.option("--lisa-alpha", type=float, default=None, help="Quadrant significance level (default 0.05)")
@out_dir_option
@click.pass_context
def classify_command(ctx, grid_path, counts, gi_path, bv_path, lisa_alpha, out_dir):
    """Join local results per cell, count classes and write the GeoJSON layers."""
    try:
        config, out = stage_config(ctx, lisa_alpha=lisa_alpha, output_dir=out_dir)
        g = datafiles.read_grid(_input(grid_path, out, pipeline.GRID_JSON))
        crashes, highg = datafiles.read_counts(_input(counts, out, pipeline.COUNTS_CSV), g)
        gi_rows = datafiles.read_gi_star(_input(gi_path, out, pipeline.GI_STAR_CSV))
        bv_rows = datafiles.read_local_moran(_input(bv_path, out, pipeline.BIVARIATE_CSV), "bv")
        stage = pipeline.classify_stage(g, crashes, highg, gi_rows, bv_rows, config.lisa_alpha)
        pipeline.write_classify_stage(g, stage, out)
    except HotspotError as e:
        exit_with_error(e)

    data = {"hotspot_groups": dict(stage.hotspot_sizes), "lisa_groups": dict(stage.lisa_sizes)}
    if ctx.obj.output_format == "table":
        console.print(format_groups_table(stage.hotspot_sizes, "Gi* hotspot tiers"))
    _report(ctx, data, format_groups_table(stage.lisa_sizes, "LISA groups", pipeline.LISA_GROUP_LABELS),
            f"Wrote {pipeline.CELLS_CSV}, group tables and GeoJSON layers to {out}")


@click.command(name="characterize")
@click.option("--pois", type=click.Path(dir_okay=False), help="POI points CSV (kind,x,y)")
@click.option("--grid", "grid_path", type=click.Path(dir_okay=False), help="grid.json")
@click.option("--cells", "cells_path", type=click.Path(dir_okay=False), help="cells.csv from `classify`")
@click.option("--group-a", type=click.Choice(QUADRANTS), default=None, help="First LISA group (default HH)")
@click.option("--group-b", type=click.Choice(QUADRANTS), multiple=True,
              help="LISA group compared against --group-a; repeat for several tables (default LH)")
@click.option("--mw-alpha", type=float, default=None, help="Significance level (default 0.05)")
@out_dir_option
@click.pass_context
def characterize_command(ctx, pois, grid_path, cells_path, group_a, group_b, mw_alpha, out_dir):
    """Mann-Whitney U tests of POI counts between LISA groups, one table per group pair."""
    try:
        config, out = stage_config(ctx, pois=pois, group_a=group_a, group_b=list(group_b) or None,
                                   mw_alpha=mw_alpha, output_dir=out_dir)
        if not config.pois:
            raise ValidationError("no POI file given (pass --pois)")
        g = datafiles.read_grid(_input(grid_path, out, pipeline.GRID_JSON))
        cells = datafiles.read_cells(_input(cells_path, out, pipeline.CELLS_CSV))
        if len(cells) != g.n_cells:
            raise ValidationError(f"cells table has {len(cells)} rows but the grid has {g.n_cells} cells")
        poi_points = datafiles.read_points(config.pois, require_kind=True)
        features, comparisons = pipeline.characterize_stage(
            g, poi_points, list(cells["lisa_quadrant"]), config.group_a, config.group_b, config.mw_alpha,
            ctx.obj.resolve_threads(),
        )
        files = pipeline.write_comparisons(comparisons, out)
    except HotspotError as e:
        exit_with_error(e)

    data = {
        "group_a": config.group_a,
        "group_b": config.group_b,
        "n_tests": sum(len(c.results) for c in comparisons),
        "pois_dropped": features.dropped,
        "comparisons": [
            {"group_b": c.group_b, "file": c.file_name, "results": [r.to_row() for r in c.results]}
            for c in comparisons
        ],
    }
    tables = [
        format_mann_whitney_table(entry["results"], config.group_a, entry["group_b"])
        for entry in data["comparisons"]
    ]
    _report(ctx, data, Group(*tables), f"{data['n_tests']} tests written to {', '.join(files)} in {out}")

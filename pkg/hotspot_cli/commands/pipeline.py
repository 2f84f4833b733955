"""
End-to-end pipeline command for the hotspot CLI.
"""

import click

from hotspot_cli.commands.stages import QUADRANTS, inference_options
from hotspot_cli.errors import HotspotError
from hotspot_cli.pipeline import LISA_GROUP_LABELS, MANIFEST_JSON, run_pipeline
from hotspot_cli.utils.console import (
    console,
    exit_with_error,
    format_global_table,
    format_groups_table,
    format_mann_whitney_table,
    print_json,
    print_success,
    print_warning,
)
from hotspot_cli.utils.progress import show_operation_progress


@click.command(name="pipeline")
@click.option("--crashes", type=click.Path(dir_okay=False), help="Crash points CSV (x,y)")
@click.option("--highg", type=click.Path(dir_okay=False), help="High-G event points CSV (x,y)")
@click.option("--pois", type=click.Path(dir_okay=False), help="POI points CSV (kind,x,y)")
@click.option("--bbox", type=float, nargs=4, default=None, metavar="MINX MINY MAXX MAXY",
              help="Study area in projected meters (default: cover all points)")
@click.option("--cell-size", type=float, default=None, help="Cell edge in meters (default 400)")
@click.option("--weights", type=click.Choice(["queen", "rook"]), default=None, help="Contiguity (default queen)")
@inference_options
@click.option("--lisa-alpha", type=float, default=None, help="Quadrant significance level (default 0.05)")
@click.option("--mw-alpha", type=float, default=None, help="Mann-Whitney significance level (default 0.05)")
@click.option("--group-a", type=click.Choice(QUADRANTS), default=None, help="First LISA group (default HH)")
@click.option("--group-b", type=click.Choice(QUADRANTS), multiple=True,
              help="LISA group compared against --group-a; repeat for several tables (default LH)")
@click.option("--out-dir", "-o", type=click.Path(file_okay=False), default=None,
              help="Output directory (default hotspot_output)")
@click.pass_context
def pipeline_command(ctx, crashes, highg, pois, bbox, cell_size, weights, permutations, seed, alternative,
                     lisa_alpha, mw_alpha, group_a, group_b, out_dir):
    """Run every stage and write the artifact bundle with its manifest."""
    try:
        config = ctx.obj.config(dict(
            crashes=crashes, highg=highg, pois=pois, bbox=bbox or None, cell_size=cell_size, weights=weights,
            permutations=permutations, seed=seed, alternative=alternative, lisa_alpha=lisa_alpha,
            mw_alpha=mw_alpha, group_a=group_a, group_b=list(group_b) or None, output_dir=out_dir,
        ))
        result = show_operation_progress(
            run_pipeline, "Running hotspot pipeline...", "Pipeline finished", "Pipeline failed",
            config, ctx.obj.resolve_threads(),
        )
    except HotspotError as e:
        exit_with_error(e)

    global_rows = [r.to_row() for r in result.global_stats]
    comparisons = [
        {"group_a": c.group_a, "group_b": c.group_b, "file": c.file_name, "results": [r.to_row() for r in c.results]}
        for c in result.comparisons
    ]
    if ctx.obj.output_format == "json":
        print_json({
            "output_dir": str(result.output_dir),
            "n_cells": result.grid.n_cells,
            "global_stats": global_rows,
            "hotspot_groups": dict(result.hotspot_sizes),
            "lisa_groups": dict(result.lisa_sizes),
            "mann_whitney": comparisons,
            "dropped": result.dropped,
        })
    elif ctx.obj.output_format == "compact":
        for row in global_rows:
            click.echo(f"{row['name']}={row['statistic']!r} p={row['pseudo_p']!r}")
        click.echo(" ".join(f"{k}={v}" for k, v in result.lisa_sizes))
        for c in comparisons:
            click.echo(f"mann_whitney_{c['group_a']}_vs_{c['group_b']}_tests={len(c['results'])}")
    else:
        console.print(format_global_table(global_rows))
        console.print(format_groups_table(result.hotspot_sizes, "Gi* hotspot tiers"))
        console.print(format_groups_table(result.lisa_sizes, "LISA groups", LISA_GROUP_LABELS))
        for c in comparisons:
            console.print(format_mann_whitney_table(c["results"], c["group_a"], c["group_b"]))
        for name, count in result.dropped.items():
            if count:
                print_warning(f"{name}: {count} points outside the grid extent were dropped")
        print_success(f"Wrote {len(result.artifacts)} artifacts and {MANIFEST_JSON} to {result.output_dir}")

"""
Synthetic data command for the hotspot CLI.
"""

from pathlib import Path

import click

from hotspot_cli import datafiles
from hotspot_cli.errors import HotspotError, ValidationError
from hotspot_cli.synth import PRESETS, Scenario, gen_counts, gen_points, gen_pois, preset
from hotspot_cli.utils.console import console, exit_with_error, format_details, print_json, print_success


@click.command(name="synth")
@click.option("--scenario", "scenario_path", type=click.Path(dir_okay=False), default=None,
              help="Scenario JSON document")
@click.option("--preset", "preset_name", type=click.Choice(PRESETS), default=None,
              help="Built-in scenario (used when --scenario is not given)")
@click.option("--seed", type=int, default=None, help="Override the scenario seed")
@click.option("--out-dir", "-o", type=click.Path(file_okay=False), default="synth_data", show_default=True,
              help="Directory for the generated files")
@click.pass_context
def synth_command(ctx, scenario_path, preset_name, seed, out_dir):
    """Generate crash, high-G and POI points with known structure.

    Writes crashes.csv, highg.csv, pois.csv (when the scenario has POI layers),
    counts.csv, grid.json and the effective scenario.json.
    """
    try:
        if scenario_path and preset_name:
            raise ValidationError("pass either --scenario or --preset, not both")
        if scenario_path:
            scenario = Scenario.load(scenario_path)
        else:
            scenario = preset(preset_name or "hotspot")
        if seed is not None:
            scenario = scenario.model_copy(update={"seed": seed})

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        g = scenario.grid.to_spec()
        crashes, highg = gen_counts(scenario)
        crash_points, highg_points = gen_points(scenario)
        datafiles.write_points(crash_points, out / "crashes.csv")
        datafiles.write_points(highg_points, out / "highg.csv")
        pois = gen_pois(scenario)
        if scenario.pois:
            datafiles.write_points(pois, out / "pois.csv", with_kind=True)
        datafiles.write_counts(g, crashes, highg, out / "counts.csv")
        datafiles.write_grid(g, out / "grid.json", bbox=g.extent)
        scenario.dump(out / "scenario.json")
    except HotspotError as e:
        exit_with_error(e)

    data = {
        "seed": scenario.seed,
        "n_rows": g.n_rows,
        "n_cols": g.n_cols,
        "crashes": len(crash_points),
        "highg": len(highg_points),
        "pois": len(pois),
        "bbox": list(g.extent),
        "out_dir": str(out),
    }
    if ctx.obj.output_format == "json":
        print_json(data)
    elif ctx.obj.output_format == "compact":
        click.echo(" ".join(f"{k}={v}" for k, v in data.items() if k != "bbox"))
    else:
        console.print(format_details(data, title="Synthetic scenario"))
        print_success(f"Run it with: hotspot-cli pipeline --crashes {out / 'crashes.csv'} "
                      f"--highg {out / 'highg.csv'} --bbox {' '.join(repr(v) for v in g.extent)}")

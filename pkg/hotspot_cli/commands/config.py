"""
Configuration commands for the hotspot CLI using global format options.
"""

import click

from hotspot_cli.config import create_default_config, get_config_path
from hotspot_cli.errors import HotspotError
from hotspot_cli.utils.console import console, exit_with_error, format_details, print_json, print_success


@click.group(name="config")
def config_group():
    """Manage hotspot-cli configuration."""
    pass


@config_group.command("init")
@click.option("--path", type=click.Path(dir_okay=False), default=None, help="Where to write (default ./hotspot.yaml)")
@click.option("--force", is_flag=True, help="Overwrite an existing file")
@click.pass_context
def init_config(ctx, path, force):
    """Write a commented default hotspot.yaml."""
    try:
        written = create_default_config(path, force=force)
    except HotspotError as e:
        exit_with_error(e)
    print_success(f"Created default config file at {written}")


@config_group.command("show")
@click.pass_context
def show_config(ctx):
    """Show the effective configuration (defaults, environment, file)."""
    try:
        config = ctx.obj.config()
        source = get_config_path(ctx.obj.config_path)
    except HotspotError as e:
        exit_with_error(e)

    data = config.model_dump(mode="json")
    output_format = ctx.obj.output_format
    if output_format == "json":
        print_json(data)
    elif output_format == "compact":
        for key, value in data.items():
            click.echo(f"{key}={value}")
    else:
        console.print(f"[bold]Current Configuration[/bold] (source: {source or 'built-in defaults'})")
        console.print(format_details(data))
        console.print(f"Threads: [cyan]{ctx.obj.resolve_threads()}[/cyan]")

"""
Main CLI entry point for hotspot-cli.
"""

import sys
from typing import Any, Dict, Optional

import click

from hotspot_cli import __version__
from hotspot_cli.commands.config import config_group
from hotspot_cli.commands.pipeline import pipeline_command
from hotspot_cli.commands.stages import (
    bivariate_command,
    characterize_command,
    classify_command,
    global_command,
    grid_command,
    local_command,
    weights_command,
)
from hotspot_cli.commands.synth import synth_command
from hotspot_cli.config import PipelineConfig, get_config, load_environment
from hotspot_cli.errors import HotspotError
from hotspot_cli.permutation import default_threads
from hotspot_cli.utils.console import print_error, setup_logging


# Define a custom context class to hold global options
class HotspotCliContext:
    def __init__(self):
        self.output_format = "table"
        self.debug = False
        self.threads: Optional[int] = None
        self.config_path: Optional[str] = None

    def resolve_threads(self) -> int:
        return self.threads if self.threads else default_threads()

    def config(self, overrides: Optional[Dict[str, Any]] = None) -> PipelineConfig:
        """Effective configuration with the given flag values layered on top."""
        return get_config(self.config_path, overrides)


@click.group()
@click.version_option(version=__version__, prog_name="hotspot-cli")
@click.option("--format", "-f", type=click.Choice(["table", "json", "compact"]),
              default="table", help="Output format (table, json, compact)")
@click.option("--debug", is_flag=True, help="Show debug logging on stderr")
@click.option("--threads", "-j", type=click.IntRange(min=1), default=None,
              help="Worker threads (default: HOTSPOT_THREADS or all cores)")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Config file (YAML or JSON)")
@click.pass_context
def cli(ctx, format, debug, threads, config_path):
    """hotspot-cli - accident hotspot and crash/near-miss concordance analysis.

    Global Options:
      --format, -f [table|json|compact]  Output format (default: table)
      --debug                            Show debug logging
      --threads, -j N                    Worker threads; results do not depend on it
      --config FILE                      Pipeline configuration file
    """
    ctx.obj = HotspotCliContext()
    ctx.obj.output_format = format
    ctx.obj.debug = debug
    ctx.obj.threads = threads
    ctx.obj.config_path = config_path

    setup_logging(debug)
    load_environment()


cli.add_command(grid_command)
cli.add_command(weights_command)
cli.add_command(global_command)
cli.add_command(local_command)
cli.add_command(bivariate_command)
cli.add_command(classify_command)
cli.add_command(characterize_command)
cli.add_command(synth_command)
cli.add_command(pipeline_command)
cli.add_command(config_group)


def main():
    """Main entry point for the CLI."""
    try:
        cli(obj={})
    except HotspotError as e:
        print_error(str(e))
        sys.exit(e.exit_code)
    except Exception as e:
        print_error(str(e))
        sys.exit(1)


if __name__ == "__main__":
    main()

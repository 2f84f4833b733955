"""
Command implementations for the hotspot CLI.
"""

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

__all__ = [
    "config_group",
    "pipeline_command",
    "grid_command",
    "weights_command",
    "global_command",
    "local_command",
    "bivariate_command",
    "classify_command",
    "characterize_command",
    "synth_command",
]

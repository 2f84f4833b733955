"""
Exception types for the hotspot CLI.

Every exception carries the process exit code the CLI uses when it escapes a command.
"""

from pathlib import Path
from typing import Optional, Union


class HotspotError(Exception):
    """Base class for all errors raised by hotspot_cli."""

    exit_code = 1


class ValidationError(HotspotError):
    """Invalid parameters or inputs (bad bbox, length mismatch, empty group, ...)."""

    exit_code = 2


class InputParseError(ValidationError):
    """A row of an input file could not be parsed."""

    def __init__(self, path: Union[str, Path], line: Optional[int], message: str):
        """
        Initialize the parse error.

        Args:
            path: File being parsed
            line: 1-based line number of the offending row (header is line 1)
            message: What was wrong with the row
        """
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class DegenerateInputError(HotspotError):
    """Statistically degenerate input, e.g. a constant variable."""

    exit_code = 3

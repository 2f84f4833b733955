"""
Console output formatting utilities for the hotspot CLI.
"""

import json
import logging
import sys
from typing import Any, Dict, List, NoReturn, Sequence, Tuple

from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

# Results go to stdout; diagnostics, progress and errors to stderr.
console = Console()
err_console = Console(stderr=True)

HOTSPOT_STYLES = {
    "Hot99": "bold red",
    "Hot95": "red",
    "Hot90": "magenta",
    "Cold90": "cyan",
    "Cold95": "blue",
    "Cold99": "bold blue",
}

LISA_STYLES = {
    "HH": "bold red",
    "HL": "magenta",
    "LH": "cyan",
    "LL": "bold blue",
}


def setup_logging(debug: bool = False) -> None:
    """Route library logging through rich on stderr (DEBUG with --debug, else WARNING)."""
    handler = RichHandler(console=err_console, show_path=debug, rich_tracebacks=debug)
    root = logging.getLogger("hotspot_cli")
    root.handlers = [handler]
    root.setLevel(logging.DEBUG if debug else logging.WARNING)
    root.propagate = False


def print_json(data: Any) -> None:
    """Print JSON on stdout with no markup processing."""
    console.print(json.dumps(data, indent=2), soft_wrap=True, markup=False, highlight=False)


def format_global_table(rows: Sequence[Dict[str, Any]]) -> Table:
    """
    Format global statistics as a rich table.

    Args:
        rows: GlobalStatResult.to_row() dictionaries

    Returns:
        Rich Table object for display
    """
    table = Table(show_header=True, title="Global spatial autocorrelation")
    table.add_column("Statistic", style="cyan", no_wrap=True)
    table.add_column("Value", style="green", justify="right")
    table.add_column("E[I]", style="yellow", justify="right")
    table.add_column("Pseudo p", style="magenta", justify="right")
    table.add_column("K", justify="right")
    table.add_column("Seed", justify="right")
    for row in rows:
        table.add_row(
            row["name"],
            f"{row['statistic']:.4f}",
            f"{row['expected']:.4f}",
            f"{row['pseudo_p']:.4f}",
            str(row["permutations"]),
            str(row["seed"]),
        )
    return table


def format_groups_table(sizes: Sequence[Tuple[str, int]], title: str, labels: Dict[str, str] = None) -> Table:
    """Category sizes, with class colors."""
    styles = {**HOTSPOT_STYLES, **LISA_STYLES}
    table = Table(show_header=True, title=title)
    table.add_column("Class", no_wrap=True)
    if labels:
        table.add_column("Description", style="dim")
    table.add_column("Cells", justify="right", style="green")
    total = 0
    for name, count in sizes:
        style = styles.get(name)
        shown = f"[{style}]{name}[/{style}]" if style else name
        cells = [shown] + ([labels.get(name, "")] if labels else []) + [str(count)]
        table.add_row(*cells)
        total += count
    table.add_section()
    table.add_row(*(["Total"] + ([""] if labels else []) + [str(total)]))
    return table


def format_mann_whitney_table(rows: List[Dict[str, Any]], group_a: str, group_b: str) -> Table:
    table = Table(show_header=True, title=f"Mann-Whitney U: {group_a} vs {group_b}")
    table.add_column("POI type", style="cyan")
    table.add_column("U", justify="right")
    table.add_column("p", justify="right", style="magenta")
    table.add_column(f"Mean {group_a}", justify="right", style="red")
    table.add_column(f"Mean {group_b}", justify="right", style="blue")
    table.add_column("Significant")
    for row in rows:
        table.add_row(
            row["poi_type"],
            f"{row['u_statistic']:.1f}",
            f"{row['p_value']:.4g}",
            f"{row['mean_group_a']:.3f}",
            f"{row['mean_group_b']:.3f}",
            "[green]yes[/green]" if row["significant"] else "no",
        )
    return table


def format_details(items: Dict[str, Any], title: str = None) -> Table:
    """
    Format key/value details as a rich table.

    Args:
        items: Mapping of property name to value

    Returns:
        Rich Table object for display
    """
    table = Table(show_header=False, box=None, title=title)
    table.add_column("Property", style="green")
    table.add_column("Value", style="yellow")
    for key, value in items.items():
        table.add_row(str(key), "-" if value is None else str(value))
    return table


def print_error(message: str) -> None:
    """
    Print an error message in red.

    Args:
        message: Error message to print
    """
    err_console.print(f"[bold red]Error: {escape(message)}[/bold red]", highlight=False, soft_wrap=True)


def print_warning(message: str) -> None:
    """
    Print a warning message in yellow.

    Args:
        message: Warning message to print
    """
    err_console.print(f"[yellow]{escape(message)}[/yellow]", highlight=False, soft_wrap=True)


def print_success(message: str) -> None:
    """
    Print a success message in green.

    Args:
        message: Success message to print
    """
    err_console.print(f"[green]{escape(message)}[/green]", highlight=False, soft_wrap=True)


def exit_with_error(error: Exception) -> NoReturn:
    """Print an error and exit with its exit code (1 for anything not a HotspotError)."""
    print_error(str(error))
    sys.exit(getattr(error, "exit_code", 1))

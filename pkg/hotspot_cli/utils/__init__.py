"""
Utility functions for the hotspot CLI.
"""

# Import commonly used utility functions for easier access
from hotspot_cli.utils.console import console, err_console, print_error, print_success, print_warning
from hotspot_cli.utils.progress import show_operation_progress

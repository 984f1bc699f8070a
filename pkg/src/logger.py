"""
Logging and progress tracking for bundle-pricing runs.
Uses Rich for the progress bars, log records and summary tables, all on stderr so the
JSON report on stdout stays clean.
"""

import logging
import os
import time
from pathlib import Path
from typing import Optional, Dict, Any

import psutil
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import Progress, SpinnerColumn, BarColumn, TextColumn, TimeElapsedColumn, TimeRemainingColumn
from rich.table import Table


class ProgressTracker:
    """Manages progress bars, logging and the closing summary of one command."""

    def __init__(self, verbose: bool = False, log_level: str = "INFO", quiet: bool = False,
                 show_memory_usage: bool = True):
        """
        Initialize progress tracker.

        Args:
            verbose: Enable verbose output (forces DEBUG)
            log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
            quiet: Suppress progress bars, info logs and the summary table
            show_memory_usage: Report resident memory in verbose mode
        """
        self.verbose = verbose
        self.quiet = quiet
        self.show_memory_usage = show_memory_usage
        self.console = Console(stderr=True)
        self.progress = None
        self.start_time = None

        if verbose:
            log_level = "DEBUG"
        elif quiet:
            log_level = "WARNING"

        logging.basicConfig(
            format="%(message)s",
            datefmt="[%X]",
            handlers=[RichHandler(console=self.console, rich_tracebacks=True)]
        )
        self.logger = logging.getLogger("bundlepricing")
        self.logger.setLevel(getattr(logging, log_level.upper()))

        self.stats: Dict[str, Any] = {}

    def __enter__(self):
        """Context manager entry."""
        self.progress = Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
            TimeElapsedColumn(),
            TimeRemainingColumn(),
            console=self.console,
            transient=True,
            disable=self.quiet,
            expand=True
        )
        self.progress.__enter__()
        self.start_time = time.time()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Context manager exit."""
        if self.progress:
            self.progress.__exit__(exc_type, exc_val, exc_tb)

    @property
    def elapsed(self) -> float:
        return time.time() - self.start_time if self.start_time else 0.0

    def create_task(self, description: str, total: Optional[int] = None) -> int:
        """
        Create a new progress task.

        Args:
            description: Task description
            total: Total number of steps (None for indeterminate)

        Returns:
            Task ID
        """
        if self.progress:
            return self.progress.add_task(description, total=total)
        return 0

    def update_task(self, task_id: int, advance: int = 1, **kwargs):
        """
        Update a progress task.

        Args:
            task_id: Task ID
            advance: Amount to advance
            **kwargs: Additional update parameters
        """
        if self.progress:
            self.progress.update(task_id, advance=advance, **kwargs)

    def record(self, key: str, value: Any):
        """Store a statistic for the summary table."""
        self.stats[key] = value

    def display_memory_usage(self):
        """Log current resident memory (verbose mode only)."""
        if not self.verbose or not self.show_memory_usage:
            return

        process = psutil.Process(os.getpid())
        memory_mb = process.memory_info().rss / (1024 * 1024)
        self.logger.debug(f"Memory usage: {memory_mb:.2f} MB")

    def display_summary(self, title: str, rows: Dict[str, str], output_files: Optional[Dict[str, Path]] = None):
        """
        Display the closing summary.

        Args:
            title: Table title (usually the command name)
            rows: Metric -> value, already formatted
            output_files: Written files by type
        """
        if self.quiet:
            return

        table = Table(title=title, show_header=True, header_style="bold green")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="green")

        for metric, value in rows.items():
            table.add_row(metric, value)
        for metric, value in self.stats.items():
            table.add_row(metric, f"{value:,}" if isinstance(value, int) else str(value))
        table.add_row("Elapsed", f"{self.elapsed:.2f} seconds")

        if output_files:
            file_table = Table(title="Output Files", show_header=True, header_style="bold blue")
            file_table.add_column("Type", style="cyan")
            file_table.add_column("Path", style="green")
            file_table.add_column("Size", style="yellow")

            for file_type, file_path in output_files.items():
                if file_path.exists():
                    size_kb = file_path.stat().st_size / 1024
                    file_table.add_row(file_type, str(file_path), f"{size_kb:.2f} KB")

            self.console.print(file_table)

        self.console.print(table)

    def log_info(self, message: str):
        """Log info message."""
        self.logger.info(message)

    def log_warning(self, message: str):
        """Log warning message."""
        self.logger.warning(message)

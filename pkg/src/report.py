"""
Run reports: one JSON document per command, optional CSV side files, and a rich
viewer for saved reports.
"""

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Any, List, Optional

from rich.console import Console
from rich.table import Table

from src.errors import ParseError
from src.logger import ProgressTracker
from src.rational import to_decimal_string, format_rational
from src.utils import read_json

SCHEMA_VERSION = 1


@dataclass
class Report:
    """Exact result of one command plus the decimal annotations printed beside it."""
    command: str
    inputs: Dict[str, Any]
    result: Dict[str, Any]
    decimal: Dict[str, Fraction] = field(default_factory=dict)

    def to_dict(self, digits: int = 12) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "inputs": self.inputs,
            "result": self.result,
            "decimal": {key: to_decimal_string(value, digits) for key, value in self.decimal.items()},
        }

    def to_json(self, digits: int = 12) -> str:
        return json.dumps(self.to_dict(digits), indent=2, ensure_ascii=False)

    def summary_rows(self, digits: int = 12) -> Dict[str, str]:
        """Exact values with their approximations, for the summary table."""
        rows = {}
        for key, value in self.decimal.items():
            exact = format_rational(value)
            approx = to_decimal_string(value, digits)
            rows[key] = exact if exact == approx else f"{exact} (~{approx})"
        return rows


class ReportExporter:
    """Writes reports and candidate tables."""

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize report exporter.

        Args:
            config: Configuration dictionary
        """
        self.config = config
        self.output_config = config.get("output", {})

    @property
    def digits(self) -> int:
        return self.output_config.get("decimal_digits", 12)

    def export_to_json(self, report: Report, output_path: Path, progress_tracker: ProgressTracker):
        """
        Write a report to a JSON file.

        Args:
            report: Report to write
            output_path: Output file path
            progress_tracker: Progress tracker instance
        """
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8') as f:
            f.write(report.to_json(self.digits))
            f.write("\n")

        file_size = output_path.stat().st_size
        progress_tracker.log_info(f"Wrote {report.command} report ({file_size / 1024:.2f} KB)")

    def export_candidates_csv(
        self,
        candidates: List[Dict[str, Any]],
        output_path: Path,
        progress_tracker: ProgressTracker
    ) -> Optional[Path]:
        """
        Export candidate price vectors to CSV, one column per bundle price.

        Args:
            candidates: Dicts with "prices" (list of strings) and "revenue"
            output_path: Output file path
            progress_tracker: Progress tracker instance

        Returns:
            The written path, or None when CSV export is disabled or nothing to write
        """
        if not self.output_config.get("export_csv", True):
            return None
        if not candidates:
            progress_tracker.log_warning("No candidates to export")
            return None

        export_task = progress_tracker.create_task(
            f"Exporting to CSV: {output_path.name}",
            total=len(candidates)
        )

        output_path.parent.mkdir(parents=True, exist_ok=True)
        width = len(candidates[0]["prices"])
        fieldnames = ["index"] + [f"p{j + 1}" for j in range(width)] + ["revenue", "revenue_decimal"]

        with open(output_path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames)
            writer.writeheader()

            for index, candidate in enumerate(candidates, 1):
                row = {"index": index, "revenue": candidate["revenue"]}
                row["revenue_decimal"] = to_decimal_string(Fraction(candidate["revenue"]), self.digits)
                for j, price in enumerate(candidate["prices"]):
                    row[f"p{j + 1}"] = price
                writer.writerow(row)
                progress_tracker.update_task(export_task, advance=1)

        progress_tracker.log_info(f"Exported {len(candidates)} candidates to {output_path}")
        return output_path


class ReportViewer:
    """Renders a saved report as rich tables."""

    def __init__(self):
        """Initialize viewer."""
        self.console = Console()
        self.data: Dict[str, Any] = {}

    def load_json(self, json_path: Path) -> Dict[str, Any]:
        """
        Load a report.

        Args:
            json_path: Path to a report written by any command

        Returns:
            The report document

        Raises:
            ParseError: If the file is not a report
        """
        data = read_json(json_path)
        if not isinstance(data, dict) or data.get("schema_version") != SCHEMA_VERSION:
            raise ParseError(f"{json_path} is not a version-{SCHEMA_VERSION} report")
        self.data = data
        self.console.print(f"[green]Loaded {data.get('command', '?')} report from {json_path.name}[/green]")
        return data

    def display_summary(self):
        """Scalar results with their decimal annotations."""
        result = self.data.get("result", {})
        decimal = self.data.get("decimal", {})

        table = Table(title=f"Report: {self.data.get('command', '?')}", show_header=True, header_style="bold magenta")
        table.add_column("Field", style="cyan")
        table.add_column("Exact", style="green")
        table.add_column("Decimal", style="yellow")

        for key, value in result.items():
            if isinstance(value, (str, int, bool)) or value is None:
                table.add_row(key, str(value), decimal.get(key, ""))
        for key, value in decimal.items():
            if key not in result:
                table.add_row(key, "", value)

        self.console.print(table)

    def display_witness(self):
        """The witness menu, when the report carries one."""
        menu = self.data.get("result", {}).get("menu")
        if not menu:
            return

        table = Table(title="Witness Menu", show_header=True, header_style="bold yellow")
        table.add_column("#", style="cyan", width=4)
        table.add_column("Bundle", style="green")
        table.add_column("Price", style="magenta")

        for idx, entry in enumerate(menu.get("entries", []), 1):
            bundle = "{" + ", ".join(str(i) for i in entry.get("bundle", [])) + "}"
            table.add_row(str(idx), bundle, entry.get("price", ""))

        self.console.print(table)

    def display_candidates(self, limit: Optional[int] = None):
        """
        Candidate price vectors of a constant-k run.

        Args:
            limit: Maximum number of rows (None for all)
        """
        candidates = self.data.get("result", {}).get("candidates")
        if not candidates:
            return

        shown = candidates[:limit] if limit else candidates
        table = Table(title=f"Candidates ({len(candidates)} total)", show_header=True, header_style="bold blue")
        table.add_column("#", style="cyan", width=5)
        table.add_column("Prices", style="green")
        table.add_column("Revenue", style="magenta")

        for idx, candidate in enumerate(shown, 1):
            table.add_row(str(idx), ", ".join(candidate.get("prices", [])), candidate.get("revenue", ""))

        self.console.print(table)

    def display_rows(self, limit: Optional[int] = None):
        """Per-instance rows of a residual scan."""
        rows = self.data.get("result", {}).get("rows")
        if not rows:
            return

        shown = rows[:limit] if limit else rows
        table = Table(title="Residual Scan", show_header=True, header_style="bold blue")
        table.add_column("n", style="cyan")
        table.add_column("t", style="cyan")
        table.add_column("t*", style="cyan")
        table.add_column("Winner", style="green")
        table.add_column("|residual| < C'/2", style="yellow")

        for row in shown:
            table.add_row(
                str(row.get("n")), str(row.get("t")), str(row.get("t_star")),
                row.get("winner", ""), "yes" if row.get("within_bound") else "[red]no[/red]",
            )

        self.console.print(table)

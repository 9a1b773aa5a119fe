from __future__ import annotations
import csv
from pathlib import Path
from typing import List, Optional

import typer
from rich.table import Table

from ..errors import EXIT_CHECK_FAILED, EXIT_OK, InvalidConfigError
from ..scenario import load_scenario, output_dir
from ..schemas import SweepRow
from ..studies import sweep
from ..utils import fmt_num, parse_values
from . import console, handle_errors

NAME = "sweep"

SUMMARY_COLUMNS = ("value", "final_abs_x", "max_abs_x_after_r", "theta_error_final",
                   "identifier_bound", "state_gain")


def write_sweep_csv(rows: List[SweepRow], path: Path) -> None:
    checks = list(rows[0].margins) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["axis", *SUMMARY_COLUMNS, *(f"margin_{c}" for c in checks), "passed"])
        for row in rows:
            w.writerow([row.axis, *(repr(getattr(row, c)) for c in SUMMARY_COLUMNS),
                        *(repr(row.margins[c]) for c in checks), row.passed])


@handle_errors
def command(
    config: Path = typer.Argument(..., exists=True, dir_okay=False, help="Base scenario YAML file"),
    axis: str = typer.Option(..., "--axis", help="theta, c, eps, sigma, amplitude or h"),
    values: str = typer.Option(..., "--values", help="Comma-separated values, e.g. 0.05,0.5,5"),
    workers: Optional[int] = typer.Option(None, "--workers", min=1),
) -> None:
    """Run the base scenario once per value of one parameter."""
    base = load_scenario(config)
    try:
        grid = parse_values(values)
    except ValueError:
        raise InvalidConfigError("--values", f"not a comma-separated list of numbers: {values!r}") from None
    if not grid:
        raise InvalidConfigError("--values", "no values given")
    rows = sweep(base, axis, grid, workers)

    table = Table(title=f"{base.name}: sweep over {axis}")
    for col in SUMMARY_COLUMNS:
        table.add_column(col, justify="right")
    table.add_column("all checks")
    for row in rows:
        table.add_row(*(fmt_num(getattr(row, c)) for c in SUMMARY_COLUMNS),
                      "[green]pass[/green]" if row.passed else "[red]FAIL[/red]")
    console.print(table)

    out = output_dir(base)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out / f"sweep_{axis}.csv")
    raise typer.Exit(EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK_FAILED)

from __future__ import annotations
from pathlib import Path

import typer

from ..scenario import load_scenario, output_dir, run_scenario
from . import console, handle_errors, print_reports, verdict

NAME = "run"


@handle_errors
def command(
    config: Path = typer.Argument(..., exists=True, dir_okay=False, help="Scenario YAML file"),
    write: bool = typer.Option(True, "--write/--no-write", help="Write trace and reports"),
) -> None:
    """Simulate one scenario and verify every enabled bound."""
    cfg = load_scenario(config)
    trace, reports = run_scenario(cfg, write=write)
    print_reports(reports, f"{cfg.name}: {len(trace)} rows, h={cfg.h:g}")
    if write:
        console.print(f"outputs in {output_dir(cfg)}")
    raise typer.Exit(verdict(reports))

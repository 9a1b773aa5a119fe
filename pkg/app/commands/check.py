from __future__ import annotations
from pathlib import Path

import typer

from ..config import output_dir_override
from ..profiles import initial_profiles
from ..reports import write_reports
from ..scenario import load_scenario, verify
from ..trace_io import read_identifier_log, read_trace
from . import console, handle_errors, print_reports, verdict

NAME = "check"


@handle_errors
def command(
    trace_csv: Path = typer.Argument(..., exists=True, dir_okay=False, help="Stored trace.csv"),
    config: Path = typer.Argument(..., exists=True, dir_okay=False, help="Scenario the trace came from"),
) -> None:
    """Re-run verification on a stored trace."""
    cfg = load_scenario(config)
    x0, u0 = initial_profiles(cfg.initial, cfg.controller.r, cfg.n, cfg.controller.eps)
    log_path = trace_csv.parent / "identifier_log.jsonl"
    trace = read_trace(trace_csv, x0.samples, u0, cfg.h, read_identifier_log(log_path))
    reports = verify(trace, cfg)
    print_reports(reports, f"{cfg.name}: stored trace {trace_csv.name}")
    out = output_dir_override() or trace_csv.parent
    out.mkdir(parents=True, exist_ok=True)
    write_reports(reports, out)
    console.print(f"reports in {out}")
    raise typer.Exit(verdict(reports))

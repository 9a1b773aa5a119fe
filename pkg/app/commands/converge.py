from __future__ import annotations
import csv
from pathlib import Path

import typer
from rich.table import Table

from ..scenario import load_scenario, output_dir
from ..studies import convergence_study, observed_order
from ..utils import fmt_num
from . import console, handle_errors

NAME = "converge"


@handle_errors
def command(
    config: Path = typer.Argument(..., exists=True, dir_okay=False, help="Scenario YAML file"),
    halvings: int = typer.Option(2, "--halvings", help="Number of step-size halvings (>= 2)"),
) -> None:
    """Step-halving study of the integral-identity residual and trace self-distance."""
    cfg = load_scenario(config)
    rows = convergence_study(cfg, halvings)

    table = Table(title=f"{cfg.name}: convergence")
    for col in ("h", "identity residual", "distance to finest", "order"):
        table.add_column(col, justify="right")
    for row in rows:
        table.add_row(fmt_num(row.h), fmt_num(row.identity_residual),
                      fmt_num(row.self_distance), fmt_num(row.order))
    console.print(table)
    order = observed_order(rows)
    console.print(f"observed order: {'exact' if order is None else f'{order:.3f}'}")

    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "convergence.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["h", "identity_residual", "self_distance", "order"])
        for row in rows:
            w.writerow([repr(row.h), repr(row.identity_residual),
                        "" if row.self_distance is None else repr(row.self_distance),
                        "" if row.order is None else repr(row.order)])

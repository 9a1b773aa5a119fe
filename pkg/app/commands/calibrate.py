from __future__ import annotations
from pathlib import Path

import typer
import yaml
from rich.table import Table

from ..calibration import calibrate
from ..config import calibration_for
from ..scenario import load_scenario, output_dir
from ..utils import fmt_num
from . import console, handle_errors

NAME = "calibrate"


@handle_errors
def command(
    config: Path = typer.Argument(..., exists=True, dir_okay=False,
                                  help="Smooth scenario YAML file"),
    halvings: int = typer.Option(2, "--halvings", help="Number of step-size halvings (>= 2)"),
    safety: float = typer.Option(10.0, "--safety", help="Factor applied to the measured constants"),
    rough_amplitude: float = typer.Option(0.1, "--rough-amplitude",
                                          help="Noise amplitude of the b run"),
) -> None:
    """Measure the tolerance constants (a, b) of every check by step-halving."""
    cfg = load_scenario(config)
    measured = calibrate(cfg, halvings, safety, rough_amplitude)

    table = Table(title=f"{cfg.name}: calibration (safety {safety:g})")
    for col in ("check", "a", "b", "settings a", "settings b"):
        table.add_column(col, justify="left" if col == "check" else "right")
    block = {}
    for name, ab in measured.items():
        current = calibration_for(name)
        table.add_row(name, fmt_num(ab["a"]), fmt_num(ab["b"]),
                      fmt_num(current["a"]), fmt_num(current["b"]))
        block[name] = {"floor": float(current["floor"]), "a": float(ab["a"]), "b": float(ab["b"])}
    console.print(table)

    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "calibration.yaml"
    path.write_text(yaml.safe_dump({"calibration": block}, sort_keys=False), encoding="utf-8")
    console.print(f"calibration block in {path}")

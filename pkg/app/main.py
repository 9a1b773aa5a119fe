from __future__ import annotations
import logging

import typer
from rich.logging import RichHandler

from .config import get_config
from .commands import calibrate, check, converge, err_console, run, sweep

cli = typer.Typer(
    name="harness",
    help="Simulate the delay-adaptive closed loop and verify its bounds.",
    add_completion=False,
    no_args_is_help=True,
)

# Commands
for module in (run, sweep, converge, check, calibrate):
    cli.command(module.NAME)(module.command)


def setup_logging(verbose: bool = False) -> None:
    level = "DEBUG" if verbose else str(get_config().get("logging", {}).get("level", "INFO")).upper()
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


@cli.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")) -> None:
    setup_logging(verbose)

# CLI verbs: one module per verb, registered in app.main
from __future__ import annotations
import functools
import logging
from typing import Callable, Iterable, Sequence

import orjson
import typer
from rich.console import Console
from rich.table import Table

from ..errors import EXIT_CHECK_FAILED, EXIT_OK, HarnessError, exit_status_for
from ..schemas import BoundReport, ErrorResponse
from ..utils import fmt_num

console = Console()
err_console = Console(stderr=True)
log = logging.getLogger(__name__)


def handle_errors(fn: Callable) -> Callable:
    """Turn HarnessError into a JSON diagnostic on stderr and the matching exit status."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except HarnessError as e:
            body = ErrorResponse(**{k: v for k, v in e.to_response().items() if k in ErrorResponse.model_fields})
            err_console.print(orjson.dumps(body.model_dump(exclude_none=True)).decode(), markup=False,
                              highlight=False, soft_wrap=True)
            raise typer.Exit(exit_status_for(e))
    return wrapper


def verdict(reports: Iterable[BoundReport]) -> int:
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


def print_reports(reports: Sequence[BoundReport], title: str) -> None:
    table = Table(title=title)
    for col in ("bound", "verdict", "worst margin", "at t", "tolerance"):
        table.add_column(col, justify="left" if col == "bound" else "right")
    for r in reports:
        table.add_row(
            r.bound_name,
            "[green]pass[/green]" if r.passed else "[red]FAIL[/red]",
            fmt_num(r.worst_margin),
            fmt_num(r.worst_time),
            fmt_num(r.tolerance),
        )
    console.print(table)

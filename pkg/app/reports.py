from __future__ import annotations
from pathlib import Path
from typing import Iterable, List

import orjson

from .schemas import BoundReport
from .utils import fmt_num, jsonable


def report_line(rep: BoundReport) -> str:
    parts = [
        rep.bound_name,
        "PASS" if rep.passed else "FAIL",
        f"worst_margin={fmt_num(rep.worst_margin)}",
        f"worst_time={fmt_num(rep.worst_time)}",
        f"tolerance={fmt_num(rep.tolerance)}",
    ]
    parts += [f"{k}={fmt_num(v)}" for k, v in rep.constant_values.items()]
    parts += [f"{k}={fmt_num(v) if isinstance(v, float) else v}" for k, v in rep.details.items()]
    return " ".join(parts)


def report_record(rep: BoundReport) -> dict:
    return jsonable(rep.model_dump())


def write_reports(reports: Iterable[BoundReport], directory: Path) -> List[Path]:
    reports = list(reports)
    txt, jsonl = directory / "reports.txt", directory / "reports.jsonl"
    txt.write_text("".join(report_line(r) + "\n" for r in reports), encoding="utf-8")
    with open(jsonl, "wb") as f:
        for r in reports:
            f.write(orjson.dumps(report_record(r)) + b"\n")
    return [txt, jsonl]


def read_reports(path: Path) -> List[dict]:
    return [orjson.loads(line) for line in path.read_bytes().splitlines() if line.strip()]

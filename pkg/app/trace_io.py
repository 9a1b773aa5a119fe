"""Trace files: CSV with columns t,x,u,p,theta_hat,d written in shortest round-trip form."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np
import orjson

from .errors import GridMismatchError, InvalidConfigError
from .identifier import UpdateRecord
from .simulation import SimulationTrace
from .utils import jsonable

COLUMNS = ("t", "x", "u", "p", "theta_hat", "d")


def write_trace_csv(trace: SimulationTrace, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(COLUMNS)
        for row in trace.rows():
            w.writerow([repr(v) for v in row])


def read_trace_columns(path: Path) -> Tuple[np.ndarray, ...]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if tuple(header or ()) != COLUMNS:
            raise InvalidConfigError(str(path), f"trace header must be {','.join(COLUMNS)}, got {header}")
        rows = [[float(v) for v in line] for line in reader if line]
    if not rows:
        raise InvalidConfigError(str(path), "trace has no rows")
    data = np.array(rows, dtype=float)
    return tuple(data[:, i].copy() for i in range(len(COLUMNS)))


def read_trace(path: Path, x0: np.ndarray, u0_interior: np.ndarray, h: float,
               update_log: Iterable[UpdateRecord] = ()) -> SimulationTrace:
    """Rebuild a trace from CSV plus the initial profiles it was started from."""
    t, x, u, p, theta_hat, d = read_trace_columns(path)
    if t.size > 1 and not np.allclose(np.diff(t), h, rtol=1e-9, atol=0.0):
        raise GridMismatchError(f"trace spacing {t[1] - t[0]!r} does not match scenario h={h!r}")
    if x[0] != x0[-1]:
        raise GridMismatchError(f"trace starts at x={x[0]!r} but the initial profile ends at {x0[-1]!r}")
    u0 = np.append(np.asarray(u0_interior, dtype=float), u[0])
    return SimulationTrace(t=t, x=x, u=u, p=p, theta_hat=theta_hat, d=d, h=h, n=x0.size - 1,
                           x0=np.asarray(x0, dtype=float), u0=u0, update_log=tuple(update_log))


def write_identifier_log(records: Iterable[UpdateRecord], path: Path) -> None:
    with open(path, "wb") as f:
        for rec in records:
            f.write(orjson.dumps(jsonable(rec.__dict__)) + b"\n")


def read_identifier_log(path: Path) -> Tuple[UpdateRecord, ...]:
    if not path.exists():
        return ()
    out = []
    for line in path.read_bytes().splitlines():
        if line.strip():
            obj = orjson.loads(line)
            out.append(UpdateRecord(float(obj["time"]), float(obj["theta_hat"]), bool(obj["updated"]),
                                    float(obj["best_norm"]), _opt_float(obj.get("best_time"))))
    return tuple(out)


def _opt_float(v) -> Optional[float]:
    return None if v is None else float(v)

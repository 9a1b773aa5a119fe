"""Parameter sweeps and step-halving convergence studies."""
from __future__ import annotations

import logging
import math
from typing import List, Optional, Sequence

import anyio
import numpy as np

from .checks import identity_residual
from .config import get_config
from .constants import asymptotic_state_gain
from .errors import HarnessError, InvalidConfigError, UnsweepableAxisError
from .identifier import estimation_bound
from .scenario import check_grid, run_scenario, simulate
from .schemas import SWEEPABLE_AXES, ConvergenceRow, ScenarioConfig, SweepRow, default_omega

log = logging.getLogger(__name__)


def with_value(base: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis not in SWEEPABLE_AXES:
        raise UnsweepableAxisError(axis, f"not sweepable; choose one of {', '.join(SWEEPABLE_AXES)}")
    section, key = SWEEPABLE_AXES[axis]
    raw = base.model_dump()
    raw[section][key] = value
    if axis == "amplitude":
        raw["disturbance"]["d_sup"] = None
    if axis == "c":
        ctl = base.controller
        if math.isclose(ctl.omega, default_omega(ctl.c, ctl.r)):
            raw["controller"]["omega"] = None
    raw["name"] = f"{base.name}-{axis}-{value:g}"
    try:
        cfg = ScenarioConfig.model_validate(raw)
    except ValueError as e:
        raise InvalidConfigError(f"{section}.{key}", str(e)) from None
    check_grid(cfg)
    return cfg


def summarize(cfg: ScenarioConfig, axis: str, value: float) -> SweepRow:
    trace, reports = run_scenario(cfg, write=False)
    n = trace.n
    after_r = np.abs(trace.x[n:])
    return SweepRow(
        axis=axis,
        value=value,
        final_abs_x=float(abs(trace.x[-1])),
        max_abs_x_after_r=float(after_r.max()) if after_r.size else math.nan,
        theta_error_final=float(abs(trace.theta_hat[-1] - cfg.plant.theta)),
        identifier_bound=estimation_bound(cfg.controller, cfg.disturbance.sup),
        state_gain=asymptotic_state_gain(cfg.controller),
        margins={r.bound_name: r.worst_margin for r in reports},
        passed=all(r.passed for r in reports),
    )


async def sweep_async(base: ScenarioConfig, axis: str, values: Sequence[float],
                      workers: Optional[int] = None) -> List[SweepRow]:
    configs = [with_value(base, axis, v) for v in values]
    limiter = anyio.CapacityLimiter(workers or get_config()["sweep"]["workers"])
    rows: List[Optional[SweepRow]] = [None] * len(configs)
    failures: List[Optional[HarnessError]] = [None] * len(configs)

    async def one(i: int, cfg: ScenarioConfig) -> None:
        try:
            rows[i] = await anyio.to_thread.run_sync(summarize, cfg, axis, values[i],
                                                     limiter=limiter)
        except HarnessError as e:
            log.warning("sweep %s=%g failed: %s", axis, values[i], e.detail)
            failures[i] = e

    async with anyio.create_task_group() as tg:
        for i, cfg in enumerate(configs):
            tg.start_soon(one, i, cfg)
    # first failing value in sweep order, raised outside the task group
    for e in failures:
        if e is not None:
            raise e
    return rows


def sweep(base: ScenarioConfig, axis: str, values: Sequence[float],
          workers: Optional[int] = None) -> List[SweepRow]:
    return anyio.run(sweep_async, base, axis, list(values), workers)


def _order(coarse: float, fine: float) -> Optional[float]:
    if coarse > 0.0 and fine > 0.0:
        return math.log2(coarse / fine)
    return None


def halved(cfg: ScenarioConfig, j: int) -> ScenarioConfig:
    """The scenario with h / 2^j and the noise realization of the base step."""
    raw = cfg.model_dump()
    raw["simulation"]["h"] = cfg.h / 2 ** j
    if raw["disturbance"]["kind"] == "uniform_noise" and raw["disturbance"]["cell"] is None:
        raw["disturbance"]["cell"] = cfg.h
    return ScenarioConfig.model_validate(raw)


def convergence_study(cfg: ScenarioConfig, halvings: int) -> List[ConvergenceRow]:
    if halvings < 2:
        raise InvalidConfigError("halvings", f"need at least 2 halvings, got {halvings}")
    traces = []
    for j in range(halvings + 1):
        level = halved(cfg, j)
        log.info("convergence level %d: h=%g", j, level.h)
        traces.append((level, simulate(level)))

    finest = traces[-1][1]
    rows: List[ConvergenceRow] = []
    prev_res = None
    for j, (level, trace) in enumerate(traces):
        res = identity_residual(trace, level.plant)
        dist = None
        if j < halvings:
            stride = 2 ** (halvings - j)
            dist = float(np.max(np.abs(trace.x - finest.x[::stride])))
        rows.append(ConvergenceRow(h=level.h, identity_residual=res, self_distance=dist,
                                   order=_order(prev_res, res) if prev_res is not None else None))
        prev_res = res
    return rows


def observed_order(rows: Sequence[ConvergenceRow]) -> Optional[float]:
    """Order between the two finest levels, None when the residuals vanish."""
    orders = [r.order for r in rows if r.order is not None]
    return orders[-1] if orders else None


def distance_orders(rows: Sequence[ConvergenceRow]) -> List[Optional[float]]:
    d = [r.self_distance for r in rows if r.self_distance is not None]
    return [_order(a, b) for a, b in zip(d, d[1:])]

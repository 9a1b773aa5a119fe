"""
Fixed-grid integration of the closed loop x' = theta x + u + d, u = -(2c + p(x_t, u_t)) x.

Each step is a Heun predictor-corrector. The input at a new grid point depends on itself through
the h/2 endpoint weight of <x_t, u_t>, so it is found by fixed-point iteration on the scalar map
u -> feedback(x_t, u_t(u)). The same iteration closes the endpoint equation of the initial data.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Iterator, NamedTuple, Optional, Tuple

import numpy as np

from .control import EndpointTerms
from .disturbance import Disturbance
from .errors import (
    BlowUpError,
    CompatibilityUnsolvableError,
    GridError,
    RejectedInputError,
    StepFailureError,
)
from .identifier import IdentifierState, UpdateRecord, boundary_update, observe
from .schemas import ControllerConfig, DisturbanceSpec, PlantParams
from .utils import is_grid_multiple, grid_count
from .window import HistoryWindow, push

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class FixedPoint(NamedTuple):
    u: float
    iterations: int
    residual: float


def solve_endpoint_input(terms: EndpointTerms, cfg: ControllerConfig, u_start: float) -> FixedPoint:
    """Iterate u <- feedback(u) until |du| <= max(fp_tol, 4 eps |u|)."""
    u = u_start
    for k in range(1, cfg.fp_max_iter + 1):
        u_new = terms.feedback(u, cfg)
        residual = abs(u_new - u)
        u = u_new
        if not math.isfinite(u):
            break
        if residual <= max(cfg.fp_tol, 4.0 * _EPS * abs(u)):
            return FixedPoint(u, k, residual)
    raise StepFailureError(f"endpoint input did not converge in {cfg.fp_max_iter} iterations (last u={u!r})")


def heun_step(x: float, f_left: float, drift_right: Callable[[float], float], h: float) -> float:
    x_pred = x + h * f_left
    return x + 0.5 * h * (f_left + drift_right(x_pred))


@dataclass(frozen=True)
class ClosedLoopState:
    k: int
    xw: HistoryWindow
    uw: HistoryWindow
    p: float
    d: float
    identifier: IdentifierState
    config: ControllerConfig
    plant: PlantParams
    fp_iterations: int = 0
    fp_residual: float = 0.0

    @property
    def h(self) -> float:
        return self.xw.h

    @property
    def t(self) -> float:
        return self.k * self.xw.h


@dataclass(frozen=True)
class SimulationTrace:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    p: np.ndarray
    theta_hat: np.ndarray
    d: np.ndarray
    h: float
    n: int
    x0: np.ndarray
    u0: np.ndarray
    update_log: Tuple[UpdateRecord, ...] = ()
    fp_iterations: Optional[np.ndarray] = None
    fp_residuals: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def r(self) -> float:
        return self.n * self.h

    def __len__(self) -> int:
        return self.t.size

    def x_history(self) -> np.ndarray:
        """State samples from -r to t_final."""
        return np.concatenate([self.x0[:-1], self.x])

    def u_history(self) -> np.ndarray:
        return np.concatenate([self.u0[:-1], self.u])

    def rows(self) -> Iterator[Tuple[float, float, float, float, float, float]]:
        for row in zip(self.t, self.x, self.u, self.p, self.theta_hat, self.d):
            yield tuple(float(v) for v in row)


def make_initial_state(x0_profile: HistoryWindow, u0_interior: np.ndarray, thetahat0: float,
                       cfg: ControllerConfig, plant: PlantParams,
                       disturbance: Optional[Disturbance] = None) -> ClosedLoopState:
    u_head = np.asarray(u0_interior, dtype=float)
    if u_head.shape != (x0_profile.n,):
        raise RejectedInputError(f"u0 interior needs {x0_profile.n} samples, got {u_head.size}")
    if not math.isclose(x0_profile.r, cfg.r, rel_tol=1e-9):
        raise RejectedInputError(f"initial profile spans {x0_profile.r:g}, delay is {cfg.r:g}")
    terms = EndpointTerms.current(x0_profile, u_head)
    try:
        fp = solve_endpoint_input(terms, cfg, -2.0 * cfg.c * x0_profile.newest)
    except StepFailureError as e:
        raise CompatibilityUnsolvableError(f"initial endpoint equation unsolvable: {e.detail}") from e
    uw = HistoryWindow(np.append(u_head, fp.u), x0_profile.h, x0_profile.t_end)
    d0 = disturbance(0.0) if disturbance is not None else 0.0
    return ClosedLoopState(
        k=0,
        xw=x0_profile,
        uw=uw,
        p=terms.gain(fp.u, cfg),
        d=d0,
        identifier=IdentifierState.start(thetahat0, cfg),
        config=cfg,
        plant=plant,
        fp_iterations=fp.iterations,
        fp_residual=fp.residual,
    )


def step(st: ClosedLoopState, disturbance: Disturbance | DisturbanceSpec) -> ClosedLoopState:
    if isinstance(disturbance, DisturbanceSpec):
        disturbance = Disturbance(disturbance, st.h)
    cfg, theta, h = st.config, st.plant.theta, st.h
    x_n, u_n = st.xw.newest, st.uw.newest
    if abs(u_n) > cfg.blowup_limit:
        log.warning("blow-up at t=%g: |u|=%g > %g", st.t, abs(u_n), cfg.blowup_limit)
        raise BlowUpError(f"|u| = {abs(u_n):g} exceeds blow-up limit {cfg.blowup_limit:g}", time=st.t)

    t_next = (st.k + 1) * h
    d_left, d_right = disturbance.stage_values(st.t, h)
    f_n = theta * x_n + u_n + d_left
    stage = {}

    def drift_right(x_pred: float) -> float:
        fp = solve_endpoint_input(EndpointTerms.ahead(st.xw, st.uw, x_pred), cfg, u_n)
        stage["fp"] = fp
        return theta * x_pred + fp.u + d_right

    try:
        x_next = heun_step(x_n, f_n, drift_right, h)
        if not math.isfinite(x_next):
            raise BlowUpError(f"state became non-finite ({x_next!r})", time=t_next)
        terms = EndpointTerms.ahead(st.xw, st.uw, x_next)
        fp = solve_endpoint_input(terms, cfg, stage["fp"].u)
    except StepFailureError as e:
        raise StepFailureError(e.detail, time=t_next) from e
    if abs(fp.u) > cfg.blowup_limit:
        log.warning("blow-up at t=%g: |u|=%g > %g", t_next, abs(fp.u), cfg.blowup_limit)
        raise BlowUpError(f"|u| = {abs(fp.u):g} exceeds blow-up limit {cfg.blowup_limit:g}", time=t_next)

    d_next = disturbance(t_next)
    return replace(
        st,
        k=st.k + 1,
        xw=push(st.xw, x_next),
        uw=push(st.uw, fp.u),
        p=terms.gain(fp.u, cfg),
        d=d_next,
        fp_iterations=max(stage["fp"].iterations, fp.iterations),
        fp_residual=fp.residual,
    )


def _identify(st: ClosedLoopState, at_boundary: bool) -> ClosedLoopState:
    ident = observe(st.identifier, st.t, st.xw, st.uw)
    if at_boundary:
        # a boundary instant closes interval i and opens interval i+1
        ident = boundary_update(ident, st.config)
        ident = observe(ident, st.t, st.xw, st.uw)
    return replace(st, identifier=ident)


def run(plant: PlantParams, cfg: ControllerConfig, spec: DisturbanceSpec, x0_profile: HistoryWindow,
        u0_interior: np.ndarray, thetahat0: float, t_final: float, identify: bool = True,
        metadata: Optional[Dict[str, Any]] = None) -> SimulationTrace:
    h, n = x0_profile.h, x0_profile.n
    if not is_grid_multiple(t_final, h):
        raise GridError("simulation.t_final", f"t_final={t_final:g} is not a multiple of h={h:g}")
    steps = grid_count(t_final, h)
    disturbance = Disturbance(spec, h)

    st = make_initial_state(x0_profile, u0_interior, thetahat0, cfg, plant, disturbance)
    if identify:
        st = _identify(st, at_boundary=False)
    log.info("run: theta=%g c=%g eps=%g r=%g h=%g steps=%d d=%s",
             plant.theta, cfg.c, cfg.eps, cfg.r, h, steps, spec.kind)

    cols = np.empty((6, steps + 1))
    iters = np.empty(steps + 1, dtype=int)
    resid = np.empty(steps + 1)
    u0 = st.uw.samples.copy()

    def record(s: ClosedLoopState) -> None:
        cols[:, s.k] = (s.t, s.xw.newest, s.uw.newest, s.p, s.identifier.theta_hat, s.d)
        iters[s.k] = s.fp_iterations
        resid[s.k] = s.fp_residual

    record(st)
    for _ in range(steps):
        st = step(st, disturbance)
        if identify:
            st = _identify(st, at_boundary=st.k % n == 0)
        record(st)

    log.info("run finished: |x(T)|=%g, theta_hat=%g, max fixed-point iterations=%d",
             abs(st.xw.newest), st.identifier.theta_hat, int(iters.max()))
    return SimulationTrace(
        t=cols[0], x=cols[1], u=cols[2], p=cols[3], theta_hat=cols[4], d=cols[5],
        h=h, n=n, x0=x0_profile.samples.copy(), u0=u0,
        update_log=st.identifier.update_log,
        fp_iterations=iters, fp_residuals=resid,
        metadata=dict(metadata or {}),
    )

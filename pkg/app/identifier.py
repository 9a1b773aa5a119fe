"""
Hybrid piecewise-constant parameter identifier.

theta_hat is held on each interval [i r, (i+1) r]. Within the interval we remember the latest
grid instant at which |x_s|_2 is maximal. At the boundary the estimate is kept when that
maximum is below sigma, otherwise it becomes the raw estimate q evaluated on the windows
remembered at that instant. The identifier only reads the closed loop.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from .control import raw_estimate
from .errors import SequencingError
from .schemas import ControllerConfig
from .window import HistoryWindow, l2_norm_sq

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UpdateRecord:
    time: float
    theta_hat: float
    updated: bool
    best_norm: float
    best_time: Optional[float]


@dataclass(frozen=True)
class IdentifierState:
    theta_hat: float
    r: float
    interval_index: int = 0
    best_norm: float = -math.inf
    best_time: Optional[float] = None
    best_x_window: Optional[HistoryWindow] = None
    best_u_window: Optional[HistoryWindow] = None
    update_log: Tuple[UpdateRecord, ...] = ()
    tie_tol: float = 1e-12

    @classmethod
    def start(cls, theta_hat0: float, cfg: ControllerConfig) -> "IdentifierState":
        return cls(theta_hat=float(theta_hat0), r=cfg.r, tie_tol=cfg.tie_tol)

    @property
    def interval(self) -> Tuple[float, float]:
        i = self.interval_index
        return i * self.r, (i + 1) * self.r


def observe(st: IdentifierState, t: float, xw: HistoryWindow, uw: HistoryWindow) -> IdentifierState:
    lo, hi = st.interval
    slack = 0.5 * xw.h
    if t < lo - slack or t > hi + slack:
        raise SequencingError(
            f"observation at t={t:g} outside interval {st.interval_index} = [{lo:g}, {hi:g}]"
        )
    norm = math.sqrt(l2_norm_sq(xw))
    # >= so that the latest (near-)maximizer wins
    if norm >= st.best_norm - st.tie_tol * max(1.0, st.best_norm):
        return replace(st, best_norm=max(norm, st.best_norm), best_time=t,
                       best_x_window=xw, best_u_window=uw)
    return st


def boundary_update(st: IdentifierState, cfg: ControllerConfig) -> IdentifierState:
    if st.best_x_window is None or st.best_u_window is None:
        raise SequencingError(f"boundary update of interval {st.interval_index} without observations")
    boundary = (st.interval_index + 1) * st.r
    updated = st.best_norm >= cfg.sigma
    theta_hat = raw_estimate(st.best_x_window, st.best_u_window) if updated else st.theta_hat
    if updated:
        log.debug("t=%g: theta_hat %g -> %g (|x_tau|=%g at tau=%g)",
                  boundary, st.theta_hat, theta_hat, st.best_norm, st.best_time)
    record = UpdateRecord(boundary, theta_hat, updated, st.best_norm, st.best_time)
    return IdentifierState(
        theta_hat=theta_hat,
        r=st.r,
        interval_index=st.interval_index + 1,
        update_log=st.update_log + (record,),
        tie_tol=st.tie_tol,
    )


def estimation_bound(cfg: ControllerConfig, d_sup: float) -> float:
    """sqrt(r)/sigma * |d|_inf, the guaranteed identification error after excitation."""
    return math.sqrt(cfg.r) / cfg.sigma * d_sup

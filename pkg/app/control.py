"""
Adaptive feedback law.

    p(x, u) = [(x(0)^2 - x(-r)^2 - 2<x,u>)^+ + c r x(0)^2] / [2(|x|_2^2 + (eps^2 - x(0)^2)^+)]
    q(x, u) = (x(0)^2 - x(-r)^2 - 2<x,u>) / (2 |x|_2^2)
    u(t)    = -(2c + p(x_t, u_t)) x(t)

All functions are pure. `EndpointTerms` freezes everything in a window pair except the newest
input sample, which enters the gain only through the trapezoid weight h/2 of <x,u>.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWindowError, ZeroExcitationError
from .schemas import ControllerConfig
from .utils import pos
from .window import HistoryWindow, inner, l2_norm_sq


def gain_from_terms(x_now: float, x_past: float, norm_sq: float, xu: float,
                    cfg: ControllerConfig) -> float:
    num = pos(x_now * x_now - x_past * x_past - 2.0 * xu) + cfg.c * cfg.r * x_now * x_now
    den = 2.0 * (norm_sq + pos(cfg.eps * cfg.eps - x_now * x_now))
    if den <= cfg.denom_floor:
        raise DegenerateWindowError(f"gain denominator {den!r} at or below floor {cfg.denom_floor!r}")
    return num / den


def adaptive_gain(xw: HistoryWindow, uw: HistoryWindow, cfg: ControllerConfig) -> float:
    xu = inner(xw, uw)
    return gain_from_terms(xw.newest, xw.oldest, l2_norm_sq(xw), xu, cfg)


def raw_estimate(xw: HistoryWindow, uw: HistoryWindow) -> float:
    xu = inner(xw, uw)
    norm_sq = l2_norm_sq(xw)
    if norm_sq <= 0.0:
        raise ZeroExcitationError(f"state window at t={xw.t_end:g} is identically zero")
    return (xw.newest ** 2 - xw.oldest ** 2 - 2.0 * xu) / (2.0 * norm_sq)


def feedback(xw: HistoryWindow, uw: HistoryWindow, cfg: ControllerConfig) -> float:
    return -(2.0 * cfg.c + adaptive_gain(xw, uw, cfg)) * xw.newest


@dataclass(frozen=True)
class EndpointTerms:
    """Window functionals with the newest input sample left open."""
    x_now: float
    x_past: float
    norm_sq: float
    xu_known: float
    h: float

    @classmethod
    def from_samples(cls, x_head: np.ndarray, x_now: float, u_head: np.ndarray,
                     h: float) -> "EndpointTerms":
        # x_head/u_head: the N samples older than the newest one
        norm_sq = h * (0.5 * x_head[0] ** 2 + float(np.dot(x_head[1:], x_head[1:])) + 0.5 * x_now ** 2)
        xu_known = h * (0.5 * x_head[0] * u_head[0] + float(np.dot(x_head[1:], u_head[1:])))
        return cls(float(x_now), float(x_head[0]), float(norm_sq), float(xu_known), h)

    @classmethod
    def current(cls, xw: HistoryWindow, u_head: np.ndarray) -> "EndpointTerms":
        return cls.from_samples(xw.samples[:-1], xw.newest, u_head, xw.h)

    @classmethod
    def ahead(cls, xw: HistoryWindow, uw: HistoryWindow, x_next: float) -> "EndpointTerms":
        """Terms of the windows one step later, with newest state x_next."""
        return cls.from_samples(xw.samples[1:], x_next, uw.samples[1:], xw.h)

    def inner_with(self, u_now: float) -> float:
        return self.xu_known + 0.5 * self.h * self.x_now * u_now

    def gain(self, u_now: float, cfg: ControllerConfig) -> float:
        return gain_from_terms(self.x_now, self.x_past, self.norm_sq, self.inner_with(u_now), cfg)

    def feedback(self, u_now: float, cfg: ControllerConfig) -> float:
        return -(2.0 * cfg.c + self.gain(u_now, cfg)) * self.x_now

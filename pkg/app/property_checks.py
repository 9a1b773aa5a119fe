"""
Property checks on windows and trajectory pairs: the gain-denominator floor, the Lipschitz
continuity of the gain, and continuous dependence of the closed loop on its initial data.
Single-window checks use HistoryWindow; the batch drivers evaluate the same formulas on
arrays of random windows.
"""
from __future__ import annotations

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .config import calibration_for, get_config
from .constants import SQRT2, continuity_exponent, continuity_gain, gain_lipschitz_constant, lipschitz_scale
from .control import adaptive_gain
from .errors import GridMismatchError, PreconditionError
from .schemas import BoundReport, ControllerConfig, DisturbanceSpec, PlantParams
from .simulation import SimulationTrace, run
from .utils import pos
from .window import HistoryWindow, derivative_norms, l1_norm, l2_norm_sq, sup_norm

log = logging.getLogger(__name__)

WindowPair = Tuple[HistoryWindow, HistoryWindow]


# ---------- denominator floor ----------
def floor_bounds(r, eps, dot_sup, dot_l2):
    """The two lower bounds on |x|_2^2 + (eps^2 - x(0)^2)^+ in terms of derivative norms."""
    first = r * eps ** 3 / (2.0 * (3.0 + r) * (r * SQRT2 * dot_sup + eps))
    second = eps ** 4 * r / (2.0 * eps ** 2 * r + 12.0 * (eps ** 2 + 2.0 * r * dot_l2 ** 2))
    return first, second


def denominator_floor_check(xw: HistoryWindow, cfg: ControllerConfig) -> BoundReport:
    lhs = l2_norm_sq(xw) + pos(cfg.eps ** 2 - xw.newest ** 2)
    dot_sup, dot_l2 = derivative_norms(xw)
    first, second = floor_bounds(xw.r, cfg.eps, dot_sup, dot_l2)
    return BoundReport.judge(
        "denominator_floor",
        lhs - max(first, second),
        1e-12 * max(1.0, lhs),
        xw.t_end,
        {"eps": cfg.eps, "r": xw.r},
        {"lhs": lhs, "sup_floor": first, "l2_floor": second, "dot_sup": dot_sup, "dot_l2": dot_l2},
    )


def random_windows(rng: np.random.Generator, count: int, n: int, max_value: float,
                   max_slope: float) -> Tuple[np.ndarray, np.ndarray]:
    """Random piecewise-linear windows, shape (count, n+1), with delays r of shape (count,)."""
    r = 10.0 ** rng.uniform(-1.0, 1.0, count)
    h = r / n
    knots = rng.integers(1, 9, count)
    cells = np.arange(n)
    slopes = np.empty((count, n))
    for i in range(count):
        cuts = np.sort(rng.choice(np.arange(1, n), size=min(knots[i] - 1, n - 1), replace=False))
        seg = np.searchsorted(cuts, cells, side="right")
        slopes[i] = rng.uniform(-1.0, 1.0, seg.max() + 1)[seg]
    scale = 10.0 ** rng.uniform(-4.0, 0.0, (count, 1))
    start = rng.uniform(-max_value, max_value, (count, 1)) * scale
    steps = slopes * max_slope * scale * h[:, None]
    x = np.concatenate([start, start + np.cumsum(steps, axis=1)], axis=1)
    return np.clip(x, -max_value, max_value), r


def _trapezoid_rows(y: np.ndarray, h: np.ndarray) -> np.ndarray:
    return h * (y.sum(axis=1) - 0.5 * (y[:, 0] + y[:, -1]))


def denominator_floor_batch(count: Optional[int] = None, eps_values: Optional[Sequence[float]] = None,
                            seed: Optional[int] = None) -> List[BoundReport]:
    batch = get_config()["batch"]
    count = count or batch["windows"]
    eps_values = eps_values or batch["eps_values"]
    rng = np.random.default_rng(batch["seed"] if seed is None else seed)
    n = int(batch["resolution"])
    reports = []
    for eps in eps_values:
        x, r = random_windows(rng, count, n, batch["max_value"], batch["max_slope"])
        h = r / n
        lhs = _trapezoid_rows(x * x, h) + np.maximum(eps ** 2 - x[:, -1] ** 2, 0.0)
        slopes = np.diff(x, axis=1) / h[:, None]
        dot_sup = np.max(np.abs(slopes), axis=1)
        dot_l2 = np.sqrt(np.sum(slopes * slopes, axis=1) * h)
        first, second = floor_bounds(r, eps, dot_sup, dot_l2)
        margin = lhs - np.maximum(first, second)
        tol = 1e-12 * np.maximum(1.0, lhs)
        i = int(np.argmin(margin + tol))
        violations = int(np.sum(margin < -tol))
        reports.append(BoundReport(
            bound_name="denominator_floor",
            constant_values={"eps": float(eps)},
            worst_margin=float(margin[i]),
            worst_time=None,
            tolerance=float(tol[i]),
            passed=bool(margin[i] >= -tol[i]),
            details={"windows": count, "violations": violations,
                     "min_relative_margin": float(np.min(margin / np.maximum(first, second)))},
        ))
    return reports


# ---------- gain Lipschitz ----------
def pair_radius(xw: HistoryWindow, uw: HistoryWindow) -> float:
    return max(sup_norm(xw), derivative_norms(xw)[1], l1_norm(uw))


def gain_lipschitz_check(pair1: WindowPair, pair2: WindowPair, R: float, cfg: ControllerConfig) -> BoundReport:
    (xw, uw), (yw, ww) = pair1, pair2
    for label, (a, b) in (("first", pair1), ("second", pair2)):
        rad = pair_radius(a, b)
        if rad > R * (1 + 1e-12):
            raise PreconditionError(f"{label} pair has norm {rad:g} > R = {R:g}")
    L = gain_lipschitz_constant(R, cfg)
    lhs = abs(adaptive_gain(xw, uw, cfg) - adaptive_gain(yw, ww, cfg))
    dist = float(np.max(np.abs(xw.samples - yw.samples)))
    dist += l1_norm(HistoryWindow(uw.samples - ww.samples, uw.h, uw.t_end))
    return BoundReport.judge("gain_lipschitz", L * dist - lhs, 1e-9 * L, None,
                             {"R": R, "L": L, "H": lipschitz_scale(R, cfg)},
                             {"lhs": lhs, "distance": dist})


def _gain_rows(x: np.ndarray, u: np.ndarray, h: float, cfg: ControllerConfig) -> np.ndarray:
    hh = np.full(x.shape[0], h)
    nsq = _trapezoid_rows(x * x, hh)
    xu = _trapezoid_rows(x * u, hh)
    x0, xr = x[:, -1], x[:, 0]
    num = np.maximum(x0 ** 2 - xr ** 2 - 2.0 * xu, 0.0) + cfg.c * cfg.r * x0 ** 2
    return num / (2.0 * (nsq + np.maximum(cfg.eps ** 2 - x0 ** 2, 0.0)))


def _shrink_into(x: np.ndarray, u: np.ndarray, h: float, R: float) -> Tuple[np.ndarray, np.ndarray]:
    hh = np.full(x.shape[0], h)
    x_sup = np.max(np.abs(x), axis=1)
    slopes = np.diff(x, axis=1) / h
    x_dot = np.sqrt(np.sum(slopes * slopes, axis=1) * h)
    u_l1 = _trapezoid_rows(np.abs(u), hh)
    fx = np.minimum(1.0, R / np.maximum(np.maximum(x_sup, x_dot), 1e-300))
    fu = np.minimum(1.0, R / np.maximum(u_l1, 1e-300))
    # a hair inside the ball so rounding never breaks the precondition
    return x * (fx * (1 - 1e-9))[:, None], u * (fu * (1 - 1e-9))[:, None]


def random_pairs(rng: np.random.Generator, count: int, n: int, R: float,
                 cfg: ControllerConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    h = cfg.r / n
    s = np.linspace(-cfg.r, 0.0, n + 1)

    def smooth(amplitude: np.ndarray) -> np.ndarray:
        k = rng.integers(0, 4, (count, 1))
        phase = rng.uniform(0, 2 * np.pi, (count, 1))
        return amplitude * np.cos(np.pi * k * s / cfg.r + phase) + rng.normal(0, 0.05, (count, n + 1)) * amplitude

    amp = R * rng.uniform(0.0, 1.0, (count, 1))
    x = smooth(amp)
    u = smooth(R * rng.uniform(0.0, 1.0, (count, 1)) / cfg.r)
    # second pair: a near copy for part of the batch, an independent draw for the rest
    near = rng.uniform(0, 1, (count, 1)) < 0.5
    y = np.where(near, x + smooth(amp * 10.0 ** rng.uniform(-6, -1, (count, 1))), smooth(R * rng.uniform(0, 1, (count, 1))))
    w = np.where(near, u + smooth(R * 10.0 ** rng.uniform(-6, -1, (count, 1))), smooth(R * rng.uniform(0, 1, (count, 1))))
    x, u = _shrink_into(x, u, h, R)
    y, w = _shrink_into(y, w, h, R)
    return x, u, y, w


def gain_lipschitz_batch(cfg: ControllerConfig, count: Optional[int] = None,
                         radii: Optional[Sequence[float]] = None, seed: Optional[int] = None) -> List[BoundReport]:
    batch = get_config()["batch"]
    count = count or batch["windows"]
    radii = radii or batch["radii"]
    rng = np.random.default_rng(batch["seed"] if seed is None else seed)
    n = int(batch["resolution"])
    h = cfg.r / n
    reports = []
    for R in radii:
        L = gain_lipschitz_constant(R, cfg)
        x, u, y, w = random_pairs(rng, count, n, R, cfg)
        lhs = np.abs(_gain_rows(x, u, h, cfg) - _gain_rows(y, w, h, cfg))
        dist = np.max(np.abs(x - y), axis=1) + _trapezoid_rows(np.abs(u - w), np.full(count, h))
        margin = L * dist - lhs
        tol = 1e-9 * L
        violations = int(np.sum(margin < -tol))
        ratio = lhs / np.maximum(dist, 1e-300)
        reports.append(BoundReport.judge(
            "gain_lipschitz", float(np.min(margin)), tol, None,
            {"R": float(R), "L": L, "H": lipschitz_scale(R, cfg)},
            {"pairs": count, "violations": violations, "max_observed_ratio": float(np.max(ratio))},
        ))
    return reports


# ---------- continuous dependence ----------
def _window_distance(a: SimulationTrace, b: SimulationTrace) -> np.ndarray:
    n, h = a.n, a.h
    dx = sliding_window_view(np.abs(a.x_history() - b.x_history()), n + 1).max(axis=1)
    du = sliding_window_view(np.abs(a.u_history() - b.u_history()), n + 1)
    return dx + h * (du.sum(axis=1) - 0.5 * (du[:, 0] + du[:, -1]))


def trajectory_radius(trace: SimulationTrace, rows: int) -> float:
    """max over the first `rows` windows of |x_t|_inf, |x_t'|_2 and |u_t|_1."""
    n, h = trace.n, trace.h
    x = sliding_window_view(trace.x_history(), n + 1)[:rows]
    u = np.abs(sliding_window_view(trace.u_history(), n + 1)[:rows])
    slopes = np.diff(x, axis=1) / h
    x_dot = np.sqrt(np.sum(slopes * slopes, axis=1) * h)
    u_l1 = h * (u.sum(axis=1) - 0.5 * (u[:, 0] + u[:, -1]))
    return float(max(np.max(np.abs(x)), np.max(x_dot), np.max(u_l1)))


def continuity_check(trace_a: SimulationTrace, trace_b: SimulationTrace, plant: PlantParams,
                     cfg: ControllerConfig, T: float) -> BoundReport:
    if trace_a.n != trace_b.n or not math.isclose(trace_a.h, trace_b.h) or len(trace_a) != len(trace_b):
        raise GridMismatchError(
            f"traces on different grids (n={trace_a.n}/{trace_b.n}, h={trace_a.h:g}/{trace_b.h:g}, "
            f"rows={len(trace_a)}/{len(trace_b)})"
        )
    rows = int(np.searchsorted(trace_a.t, T + 0.5 * trace_a.h))
    dist = _window_distance(trace_a, trace_b)[:rows]
    R = max(trajectory_radius(trace_a, rows), trajectory_radius(trace_b, rows))
    Q = continuity_gain(R, T, plant, cfg)
    initial = float(dist[0])
    bound = Q * initial if initial > 0.0 else 0.0
    cal = calibration_for("continuity")
    details = {"initial_distance": initial, "max_distance": float(np.max(dist)),
               "max_amplification": float(np.max(dist) / initial) if initial > 0 else 0.0}
    if not math.isfinite(Q):
        details.update(vacuous=True, note="Q overflows - bound vacuous")
        log.warning("continuity T=%g: Q overflows (log Q=%.3g), bound vacuous",
                    T, continuity_exponent(R, T, plant, cfg))
    return BoundReport.judge(
        "continuity", float(np.min(bound - dist)), float(cal["floor"]),
        float(trace_a.t[int(np.argmax(dist))]),
        {"R": R, "Q": Q, "log_Q": continuity_exponent(R, T, plant, cfg), "T": T},
        details,
    )


def perturbed_pair(plant: PlantParams, cfg: ControllerConfig, spec: DisturbanceSpec,
                   x0: HistoryWindow, u0_interior: np.ndarray, thetahat0: float,
                   delta: float, T: float) -> BoundReport:
    """Run from x0 and from x0 + delta and compare the two closed loops up to T."""
    shifted = HistoryWindow(x0.samples + delta, x0.h, x0.t_end)
    a = run(plant, cfg, spec, x0, u0_interior, thetahat0, T, identify=False)
    b = run(plant, cfg, spec, shifted, u0_interior, thetahat0, T, identify=False)
    rep = continuity_check(a, b, plant, cfg, T)
    log.info("continuity delta=%g T=%g: amplification %.3g (Q=%.3g)",
             delta, T, rep.details["max_amplification"], rep.constant_values["Q"])
    return rep

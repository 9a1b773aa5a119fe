"""
Trajectory checks. Each check compares a measured quantity with a closed-form bound at every
grid instant and returns a BoundReport whose margin is bound - measured. Tolerances are additive:

    tol = floor + (a h^2 + b h roughness) * max(1, peak |x|, |u|)^2

roughness is sup|d| for piecewise disturbances and 0 for smooth ones. The checked quantities are
quadratic in the signals (window integrals of x^2 and x u), hence the squared peak; d enters only
through roughness. (floor, a, b) per check come from the `calibration` settings, which
`harness calibrate` measures by step-halving.
"""
from __future__ import annotations

import logging
import math
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.integrate import cumulative_trapezoid

from .config import calibration_for
from .constants import (
    SQRT2,
    asymptotic_state_gain,
    identifier_horizons,
    input_residual_gain,
    quadratic_input_gain,
    state_overshoot,
)
from .disturbance import prehistory_disturbance
from .errors import InvalidConfigError
from .identifier import estimation_bound
from .schemas import CHECK_NAMES, BoundReport, ControllerConfig, DisturbanceSpec, PlantParams
from .simulation import SimulationTrace
from .window import HistoryWindow, derivative_norms

log = logging.getLogger(__name__)

ZERO_DISTURBANCE = DisturbanceSpec()


class TraceWindows:
    """Sliding-window functionals of a trace, one value per trace row."""

    def __init__(self, trace: SimulationTrace, theta: float):
        self.trace = trace
        self.n = trace.n
        self.h = trace.h
        self.x = trace.x_history()
        self.u = trace.u_history()
        d_pre = prehistory_disturbance(trace.x0, trace.u0, theta, trace.h)[:-1]
        self.d = np.concatenate([d_pre, trace.d])

    def integral(self, y: np.ndarray) -> np.ndarray:
        c = cumulative_trapezoid(y, dx=self.h, initial=0.0)
        return c[self.n:] - c[:-self.n]

    def sliding_sup(self, y: np.ndarray) -> np.ndarray:
        return sliding_window_view(np.abs(y), self.n + 1).max(axis=1)

    @cached_property
    def norm_sq(self) -> np.ndarray:
        return self.integral(self.x * self.x)

    @cached_property
    def xu(self) -> np.ndarray:
        return self.integral(self.x * self.u)

    @cached_property
    def xd(self) -> np.ndarray:
        return self.integral(self.x * self.d)

    @cached_property
    def x_past(self) -> np.ndarray:
        return self.x[: self.x.size - self.n]

    @cached_property
    def prehistory_mask(self) -> np.ndarray:
        mask = np.zeros(self.x.size, dtype=bool)
        mask[: self.n] = True
        return mask


def lyapunov_w(x: np.ndarray | float, eps: float) -> np.ndarray | float:
    """W(x) = ((x^2 - eps^2)^+)^2 / 2"""
    v = np.maximum(np.square(x) - eps * eps, 0.0)
    return 0.5 * v * v


def gain_series(x_now, x_past, norm_sq, xu, cfg: ControllerConfig) -> np.ndarray:
    num = np.maximum(x_now ** 2 - x_past ** 2 - 2.0 * xu, 0.0) + cfg.c * cfg.r * x_now ** 2
    den = 2.0 * (norm_sq + np.maximum(cfg.eps ** 2 - x_now ** 2, 0.0))
    return num / den


def signal_scale(trace: SimulationTrace) -> float:
    """max(1, peak |x|, |u|)^2 over the trace and its initial profiles; inf if it diverged."""
    peak = float(np.max(np.abs(np.concatenate([trace.x_history(), trace.u_history()]))))
    return max(1.0, peak) ** 2 if math.isfinite(peak) else math.inf


def identifier_scale(trace: SimulationTrace, cfg: ControllerConfig) -> float:
    """1 / min(1, 2 nu^2), nu the smallest window norm behind an update (sigma when none)."""
    norms = [rec.best_norm for rec in trace.update_log if rec.updated]
    nu = min(norms) if norms else cfg.sigma
    return 1.0 / min(1.0, 2.0 * nu * nu)


def tolerance(name: str, trace: SimulationTrace, spec: DisturbanceSpec,
              scale: float = 1.0) -> float:
    cal = calibration_for(name)
    magnitude = signal_scale(trace)
    if not math.isfinite(magnitude):
        return float(cal["floor"])
    return float(cal["floor"] + (cal["a"] * trace.h ** 2 + cal["b"] * trace.h * spec.roughness)
                 * magnitude * scale)


def _report(name: str, margins: np.ndarray, times: np.ndarray, tol: float,
            constants: Dict[str, float], details: Dict) -> BoundReport:
    if margins.size == 0:
        details = {**details, "vacuous": True}
        return BoundReport.judge(name, math.inf, tol, None, constants, details)
    nan = np.isnan(margins)
    i = int(np.argmax(nan)) if nan.any() else int(np.argmin(margins))
    return BoundReport.judge(name, float(margins[i]), tol, float(times[i]), constants, details)


def check_state_bound(trace: SimulationTrace, plant: PlantParams, cfg: ControllerConfig,
                      spec: DisturbanceSpec = ZERO_DISTURBANCE) -> BoundReport:
    M = state_overshoot(plant, cfg)
    d_sup = spec.sup
    g = asymptotic_state_gain(cfg)
    t = trace.t
    decay = np.exp(-cfg.c * np.maximum(t - trace.r, 0.0))
    bound = M * decay * abs(trace.x[0]) + cfg.eps + (1.0 + math.sqrt(cfg.r) * M * decay) * g * d_sup
    margins = bound - np.abs(trace.x)

    # window form: |x_t|_inf against the sup of the initial profile
    tw = TraceWindows(trace, plant.theta)
    decay2 = np.exp(-cfg.c * np.maximum(t - 2.0 * trace.r, 0.0))
    x0_sup = float(np.max(np.abs(trace.x0)))
    sup_bound = M * decay2 * x0_sup + cfg.eps + (1.0 + math.sqrt(cfg.r) * M * decay2) * g * d_sup
    sup_margin = sup_bound - tw.sliding_sup(tw.x)

    details = {
        "asymptotic_radius": cfg.eps + g * d_sup,
        "final_abs_x": float(abs(trace.x[-1])),
        "window_form_margin": float(np.min(sup_margin)),
    }
    return _report("state_bound", margins, t, tolerance("state_bound", trace, spec),
                   {"M": M, "asymptotic_gain": g, "d_sup": d_sup}, details)


def check_post_delay_state_bound(trace: SimulationTrace, plant: PlantParams, cfg: ControllerConfig,
                                 spec: DisturbanceSpec = ZERO_DISTURBANCE) -> BoundReport:
    n = trace.n
    g = asymptotic_state_gain(cfg)
    tol = tolerance("post_delay_state_bound", trace, spec)
    if len(trace) <= n:
        return _report("post_delay_state_bound", np.empty(0), np.empty(0), tol, {"asymptotic_gain": g}, {})
    t = trace.t[n:]
    bound = np.exp(-cfg.c * (t - trace.r)) * abs(trace.x[n]) + cfg.eps + g * spec.sup
    return _report("post_delay_state_bound", bound - np.abs(trace.x[n:]), t, tol,
                   {"asymptotic_gain": g, "d_sup": spec.sup}, {"abs_x_at_r": float(abs(trace.x[n]))})


def input_envelope(t: np.ndarray, plant: PlantParams, cfg: ControllerConfig, x0_sup: float,
                   u0_sup: float, x0_dot_sup: float, d_sup: float) -> np.ndarray:
    """Explicit bound on max_{0<=s<=t} f(s) exp(-omega (t - s)) built from the initial data."""
    th, c, r, eps, w = abs(plant.theta), cfg.c, cfg.r, cfg.eps, cfg.omega
    M = state_overshoot(plant, cfg)
    K = quadratic_input_gain(cfg)
    lin = 2.0 * th + c * (r + 3.0)
    init = x0_sup + u0_sup + x0_dot_sup
    decay = np.exp(-w * t)
    smr = 1.0 + math.sqrt(r) * M
    return (
        eps / (2.0 * SQRT2 * r) + eps * lin
        + (3.0 * th + c * (r + 3.0)) * M * decay * math.exp(2.0 * c * r) * init
        + K * (M * M * x0_sup ** 2 / eps ** 2 + 2.0) * (2.0 + th) ** 2 * decay * math.exp(c * r) * init ** 2
        + (lin * smr * asymptotic_state_gain(cfg) + 0.5) * d_sup
        + K * (2.0 + (M * M + (2.0 + th) ** 2 * smr ** 2 / c ** 2) * (init + d_sup) ** 2 / eps ** 2) * d_sup ** 2
    )


def check_input_bound(trace: SimulationTrace, plant: PlantParams, cfg: ControllerConfig,
                      spec: DisturbanceSpec = ZERO_DISTURBANCE,
                      x0_dot_sup: Optional[float] = None) -> BoundReport:
    w, r, c, eps = cfg.omega, cfg.r, cfg.c, cfg.eps
    if w is None or math.exp(w * r) >= 2.0:
        raise InvalidConfigError("controller.omega", "decay-rate constraint exp(omega*r) < 2 violated")
    tw = TraceWindows(trace, plant.theta)
    t, h = trace.t, trace.h
    th = abs(plant.theta)

    x_sup = tw.sliding_sup(tw.x)
    d_sup_w = tw.sliding_sup(tw.d)
    dhu_sup = tw.sliding_sup(tw.d + np.where(tw.prehistory_mask, tw.u, 0.0))
    f = ((2.0 * th + c * (r + 3.0)) * x_sup + 0.5 * d_sup_w + eps / (2.0 * SQRT2 * r)
         + 4.0 * SQRT2 * (r + 3.0) * r / eps ** 3 * (d_sup_w + c * r * dhu_sup) ** 2 * trace.x ** 2)

    # m_k = max_{s <= t_k} f(s) exp(-omega (t_k - s))
    m = np.empty_like(f)
    shrink = math.exp(-w * h)
    acc = -math.inf
    for k, fk in enumerate(f):
        acc = max(acc * shrink, fk)
        m[k] = acc

    u0_sup = float(np.max(np.abs(trace.u0)))
    amp = 2.0 / (2.0 - math.exp(w * r)) * math.exp(4.0 * max(plant.theta, 0.0) * r)
    bound = 0.5 * np.exp(-w * (t - r)) * u0_sup + amp * m
    margins = bound - np.abs(trace.u)

    # sup form over windows; before t = 0 the bound is |u0|_inf
    n = trace.n
    bound_hist = np.concatenate([np.full(n, u0_sup), bound])
    sup_margin = tw.sliding_sup(bound_hist) - tw.sliding_sup(tw.u)

    if x0_dot_sup is None:
        x0_dot_sup = derivative_norms(HistoryWindow(trace.x0, h))[0]
    envelope = input_envelope(t, plant, cfg, float(np.max(np.abs(trace.x0))), u0_sup, x0_dot_sup, spec.sup)

    rho = input_residual_gain(plant, cfg)
    details: Dict = {
        "sup_form_margin": float(np.min(sup_margin)),
        "envelope_margin": float(np.min(envelope - m)),
        "residual_floor": eps * rho,
    }
    if spec.sup == 0.0 and len(trace) > n:
        steady = float(np.max(np.abs(trace.u[-(n + 1):])))
        details.update(steady_sup_abs_u=steady, steady_floor_margin=eps * rho - steady)
    constants = {"omega": w, "rho": rho, "K": quadratic_input_gain(cfg),
                 "M": state_overshoot(plant, cfg), "x0_dot_sup": x0_dot_sup}
    return _report("input_bound", margins, t, tolerance("input_bound", trace, spec), constants, details)


def check_identity(trace: SimulationTrace, plant: PlantParams,
                   spec: DisturbanceSpec = ZERO_DISTURBANCE) -> BoundReport:
    """x(t)^2 - x(t-r)^2 - 2<x_t,u_t> = 2 theta |x_t|_2^2 + 2<x_t,d_t> for t >= r."""
    tol = tolerance("identity", trace, spec)
    n = trace.n
    if len(trace) <= n:
        return _report("identity", np.empty(0), np.empty(0), tol, {}, {})
    tw = TraceWindows(trace, plant.theta)
    s = slice(n, None)
    residual = (trace.x[s] ** 2 - tw.x_past[s] ** 2 - 2.0 * tw.xu[s]
                - 2.0 * plant.theta * tw.norm_sq[s] - 2.0 * tw.xd[s])
    worst = float(np.max(np.abs(residual)))
    return _report("identity", -np.abs(residual), trace.t[s], tol, {}, {"worst_residual": worst})


def identity_residual(trace: SimulationTrace, plant: PlantParams) -> float:
    return check_identity(trace, plant).details.get("worst_residual", 0.0)


def check_identifier_bound(trace: SimulationTrace, plant: PlantParams, cfg: ControllerConfig,
                           spec: DisturbanceSpec = ZERO_DISTURBANCE) -> BoundReport:
    bound = estimation_bound(cfg, spec.sup)
    tol = tolerance("identifier_bound", trace, spec, scale=identifier_scale(trace, cfg))
    n = trace.n
    tw = TraceWindows(trace, plant.theta)
    norms = np.sqrt(np.maximum(tw.norm_sq, 0.0))
    excited = np.flatnonzero(norms[n:] >= cfg.sigma) + n
    first_boundary = [rec for rec in trace.update_log if math.isclose(rec.time, cfg.r)]
    details: Dict = {
        "updates": sum(1 for rec in trace.update_log if rec.updated),
        "first_interval_excited": bool(first_boundary and first_boundary[0].updated),
    }
    constants = {"bound": bound, "d_sup": spec.sup}
    if excited.size == 0:
        details.update(note="no excitation - bound vacuous",
                       theta_hat_constant=bool(np.all(trace.theta_hat == trace.theta_hat[0])))
        return _report("identifier_bound", np.empty(0), np.empty(0), tol, constants, details)

    min_i = float(trace.t[excited[0]])
    nominal, effective = identifier_horizons(cfg.r, min_i)
    details.update(min_excited_time=min_i, horizon_nominal=nominal, horizon=effective)
    rows = trace.t >= effective - 0.5 * trace.h
    err = np.abs(trace.theta_hat[rows] - plant.theta)
    if err.size:
        details["final_error"] = float(err[-1])
    return _report("identifier_bound", bound - err, trace.t[rows], tol, constants, details)


def check_lyapunov_decay(trace: SimulationTrace, plant: PlantParams, cfg: ControllerConfig,
                         spec: DisturbanceSpec = ZERO_DISTURBANCE) -> BoundReport:
    tol = tolerance("lyapunov_decay", trace, spec)
    n = trace.n
    floor = spec.sup ** 2 / (SQRT2 * cfg.c ** 2)
    if len(trace) <= n:
        return _report("lyapunov_decay", np.empty(0), np.empty(0), tol, {"floor": floor}, {})
    t = trace.t[n:]
    v = np.maximum(trace.x[n:] ** 2 - cfg.eps ** 2, 0.0)
    bound = np.exp(-2.0 * cfg.c * (t - trace.r)) * v[0] + floor
    details = {"W_initial": float(lyapunov_w(trace.x[0], cfg.eps)),
               "W_at_r": float(lyapunov_w(trace.x[n], cfg.eps)),
               "W_final": float(lyapunov_w(trace.x[-1], cfg.eps))}
    return _report("lyapunov_decay", bound - v, t, tol, {"floor": floor}, details)


def check_feedback_identity(trace: SimulationTrace, plant: PlantParams, cfg: ControllerConfig,
                            spec: DisturbanceSpec = ZERO_DISTURBANCE) -> BoundReport:
    """u(t) rebuilt from theta and d instead of the measured increment, t >= r."""
    tol = tolerance("feedback_identity", trace, spec)
    n = trace.n
    if len(trace) <= n:
        return _report("feedback_identity", np.empty(0), np.empty(0), tol, {}, {})
    tw = TraceWindows(trace, plant.theta)
    s = slice(n, None)
    x, nsq = trace.x[s], tw.norm_sq[s]
    num = 2.0 * np.maximum(plant.theta * nsq + tw.xd[s], 0.0) + cfg.c * cfg.r * x ** 2
    den = 2.0 * (nsq + np.maximum(cfg.eps ** 2 - x ** 2, 0.0))
    predicted = -2.0 * cfg.c * x - num / den * x
    residual = np.abs(trace.u[s] - predicted)
    return _report("feedback_identity", -residual, trace.t[s], tol, {},
                   {"worst_residual": float(np.max(residual))})


def check_control_sign(trace: SimulationTrace, plant: PlantParams, cfg: ControllerConfig,
                       spec: DisturbanceSpec = ZERO_DISTURBANCE) -> BoundReport:
    return _report("control_sign", -(trace.x * trace.u), trace.t,
                   tolerance("control_sign", trace, spec), {}, {})


def check_feedback_consistency(trace: SimulationTrace, plant: PlantParams, cfg: ControllerConfig,
                               spec: DisturbanceSpec = ZERO_DISTURBANCE) -> BoundReport:
    """u at every row against the feedback law evaluated on its own windows."""
    tw = TraceWindows(trace, plant.theta)
    p = gain_series(trace.x, tw.x_past, tw.norm_sq, tw.xu, cfg)
    residual = np.abs(trace.u + (2.0 * cfg.c + p) * trace.x)
    details: Dict = {"worst_residual": float(np.max(residual)),
                     "worst_gain_mismatch": float(np.max(np.abs(p - trace.p)))}
    if trace.fp_iterations is not None:
        details.update(max_fp_iterations=int(np.max(trace.fp_iterations)),
                       max_fp_residual=float(np.max(trace.fp_residuals)))
    return _report("feedback_consistency", -residual, trace.t,
                   tolerance("feedback_consistency", trace, spec), {"fp_tol": cfg.fp_tol}, details)


TraceCheck = Callable[..., BoundReport]

TRACE_CHECKS: Dict[str, TraceCheck] = {
    "state_bound": check_state_bound,
    "post_delay_state_bound": check_post_delay_state_bound,
    "input_bound": check_input_bound,
    "identity": lambda trace, plant, cfg, spec: check_identity(trace, plant, spec),
    "identifier_bound": check_identifier_bound,
    "lyapunov_decay": check_lyapunov_decay,
    "feedback_identity": check_feedback_identity,
    "control_sign": check_control_sign,
    "feedback_consistency": check_feedback_consistency,
}


def run_checks(trace: SimulationTrace, plant: PlantParams, cfg: ControllerConfig,
               spec: DisturbanceSpec = ZERO_DISTURBANCE, enabled: Iterable[str] = CHECK_NAMES,
               x0_dot_sup: Optional[float] = None) -> List[BoundReport]:
    reports = []
    for name in enabled:
        if name == "input_bound":
            rep = check_input_bound(trace, plant, cfg, spec, x0_dot_sup=x0_dot_sup)
        else:
            rep = TRACE_CHECKS[name](trace, plant, cfg, spec)
        level = logging.INFO if rep.passed else logging.WARNING
        log.log(level, "%s: %s (worst margin %.3g, tol %.3g)", name,
                "pass" if rep.passed else "FAIL", rep.worst_margin, rep.tolerance)
        reports.append(rep)
    return reports

"""
Step-halving calibration of the check tolerances.

Every run at h, h/2, ..., h/2^k is compared with the finest one on the shared grid. A bound check
absorbs the simulation error of the signal it measures (x, u, the Lyapunov function or theta_hat);
the identity checks are exact in the limit, so their own residual is the error. Errors are divided
by the tolerance magnitude of their run. The smooth scenario fixes a (error ~ a h^2), the same
scenario under seeded uniform noise fixes b (error ~ b h sup|d|).
"""
from __future__ import annotations

import logging
from typing import Callable, Dict, List, NamedTuple

import numpy as np

from .checks import identifier_scale, run_checks, signal_scale
from .errors import InvalidConfigError
from .scenario import simulate
from .schemas import DisturbanceSpec, ScenarioConfig
from .simulation import SimulationTrace
from .studies import halved

log = logging.getLogger(__name__)

Signal = Callable[[SimulationTrace, ScenarioConfig], np.ndarray]

SIGNALS: Dict[str, Signal] = {
    "state_bound": lambda tr, cfg: tr.x,
    "post_delay_state_bound": lambda tr, cfg: tr.x,
    "input_bound": lambda tr, cfg: tr.u,
    "lyapunov_decay": lambda tr, cfg: np.maximum(tr.x ** 2 - cfg.controller.eps ** 2, 0.0),
    "identifier_bound": lambda tr, cfg: tr.theta_hat,
}
RESIDUAL_CHECKS = ("identity", "feedback_identity")
CALIBRATED_CHECKS = tuple(SIGNALS) + RESIDUAL_CHECKS


class LevelError(NamedTuple):
    h: float
    error: float
    roughness: float


def _magnitude(name: str, trace: SimulationTrace, cfg: ScenarioConfig) -> float:
    m = signal_scale(trace)
    if name == "identifier_bound":
        m *= identifier_scale(trace, cfg.controller)
    return m


def level_errors(cfg: ScenarioConfig, halvings: int) -> Dict[str, List[LevelError]]:
    """Normalized discretization error per check and step size."""
    if halvings < 2:
        raise InvalidConfigError("halvings", f"need at least 2 halvings, got {halvings}")
    runs = []
    for j in range(halvings + 1):
        level = halved(cfg, j)
        log.info("calibration %s level %d: h=%g", cfg.name, j, level.h)
        runs.append((level, simulate(level)))

    finest_cfg, finest = runs[-1]
    errors: Dict[str, List[LevelError]] = {name: [] for name in CALIBRATED_CHECKS}
    for j, (level, trace) in enumerate(runs):
        rough = level.disturbance.roughness
        reports = run_checks(trace, level.plant, level.controller, level.disturbance,
                             RESIDUAL_CHECKS)
        for rep in reports:
            residual = rep.details.get("worst_residual", 0.0)
            errors[rep.bound_name].append(
                LevelError(level.h, residual / _magnitude(rep.bound_name, trace, level), rough))
        if j == halvings:
            continue
        stride = 2 ** (halvings - j)
        for name, signal in SIGNALS.items():
            diff = np.abs(signal(trace, level) - signal(finest, finest_cfg)[::stride])
            error = float(np.max(diff)) / _magnitude(name, trace, level)
            errors[name].append(LevelError(level.h, error, rough))
    return errors


def with_noise(cfg: ScenarioConfig, amplitude: float) -> ScenarioConfig:
    if amplitude <= 0.0:
        raise InvalidConfigError("rough_amplitude",
                                 f"noise amplitude must be positive, got {amplitude:g}")
    raw = cfg.model_dump()
    raw["disturbance"] = DisturbanceSpec(kind="uniform_noise", amplitude=amplitude,
                                         seed=cfg.disturbance.seed).model_dump()
    raw["name"] = f"{cfg.name}-noise"
    return ScenarioConfig.model_validate(raw)


def calibrate(cfg: ScenarioConfig, halvings: int = 2, safety: float = 10.0,
              rough_amplitude: float = 0.1) -> Dict[str, Dict[str, float]]:
    """(a, b) per check, multiplied by `safety`; safety=1 gives the measured constants."""
    if cfg.disturbance.roughness > 0.0:
        raise InvalidConfigError("disturbance.kind",
                                 "calibrate from a scenario with a smooth disturbance")
    smooth = level_errors(cfg, halvings)
    rough = level_errors(with_noise(cfg, rough_amplitude), halvings)
    result: Dict[str, Dict[str, float]] = {}
    for name in CALIBRATED_CHECKS:
        a = max((e.error / e.h ** 2 for e in smooth[name]), default=0.0)
        b = max((max(0.0, e.error - a * e.h ** 2) / (e.h * e.roughness) for e in rough[name]),
                default=0.0)
        log.info("calibration %s: a=%.3g b=%.3g (before safety %g)", name, a, b, safety)
        result[name] = {"a": safety * a, "b": safety * b}
    return result

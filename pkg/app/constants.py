"""Closed-form constants of the stability and continuity estimates. Recomputed on every call."""
from __future__ import annotations

import math

from .schemas import ControllerConfig, PlantParams
from .utils import pos

SQRT2 = math.sqrt(2.0)
STATE_GAIN = 2.0 ** -0.25


def state_overshoot(plant: PlantParams, cfg: ControllerConfig) -> float:
    """M = exp((theta + c^2 / sqrt(2) - 2c)^+ r)"""
    return math.exp(pos(plant.theta + SQRT2 / 2.0 * cfg.c ** 2 - 2.0 * cfg.c) * cfg.r)


def input_residual_gain(plant: PlantParams, cfg: ControllerConfig) -> float:
    """rho = 2|theta| + 1/(2 sqrt(2) r) + c(r + 3)"""
    return 2.0 * abs(plant.theta) + 1.0 / (2.0 * SQRT2 * cfg.r) + cfg.c * (cfg.r + 3.0)


def quadratic_input_gain(cfg: ControllerConfig) -> float:
    """K = 16 sqrt(2) (r + 3) r (1 + c r)^2 / eps"""
    return 16.0 * SQRT2 * (cfg.r + 3.0) * cfg.r * (1.0 + cfg.c * cfg.r) ** 2 / cfg.eps


def asymptotic_state_gain(cfg: ControllerConfig) -> float:
    return STATE_GAIN / cfg.c


def lipschitz_scale(R: float, cfg: ControllerConfig) -> float:
    """H(R) = (eps^2 r + 6(eps^2 + 2 r R^2)) / (eps^4 r)"""
    e2 = cfg.eps ** 2
    return (e2 * cfg.r + 6.0 * (e2 + 2.0 * cfg.r * R * R)) / (e2 * e2 * cfg.r)


def gain_lipschitz_constant(R: float, cfg: ControllerConfig) -> float:
    """L(R) = (3 + c r)(1 + 2 R^2 (r + 1) H(R)) 2 R H(R)"""
    H = lipschitz_scale(R, cfg)
    return (3.0 + cfg.c * cfg.r) * (1.0 + 2.0 * R * R * (cfg.r + 1.0) * H) * 2.0 * R * H


def continuity_exponent(R: float, T: float, plant: PlantParams, cfg: ControllerConfig) -> float:
    L = gain_lipschitz_constant((1.0 + cfg.r) * R, cfg)
    return 2.0 * (2.0 * cfg.c + abs(plant.theta) + (2.0 + cfg.r) * R * L) * T


def continuity_gain(R: float, T: float, plant: PlantParams, cfg: ControllerConfig) -> float:
    """Q(R, T) = exp(2(2c + |theta| + (2 + r) R L((1 + r) R)) T); inf when it overflows."""
    z = continuity_exponent(R, T, plant, cfg)
    return math.exp(z) if z < 709.0 else math.inf


def identifier_horizons(r: float, first_excited: float) -> tuple[float, float]:
    """(nominal, effective) times after which the identification error bound applies."""
    nominal = r * math.ceil(first_excited / r - 1e-9)
    return nominal, max(nominal, 2.0 * r)

from __future__ import annotations
import math
from functools import lru_cache
from typing import Tuple

import numpy as np

from .errors import DisturbanceRangeError, RejectedInputError
from .schemas import DisturbanceSpec

NOISE_CHUNK = 4096
_CELL_SNAP = 1e-9


class Disturbance:
    """Evaluator for a DisturbanceSpec. Noise cells are drawn lazily, one chunk at a time."""

    def __init__(self, spec: DisturbanceSpec, h: float | None = None):
        self.spec = spec
        self.cell = spec.cell or h
        if spec.kind == "uniform_noise" and not self.cell:
            raise RejectedInputError("uniform_noise needs a cell width (or the scenario step size)")
        self._chunk = lru_cache(maxsize=64)(self._draw_chunk)
        if spec.kind == "table":
            self._tt = np.asarray(spec.table_t, dtype=float)
            self._td = np.asarray(spec.table_d, dtype=float)

    def _draw_chunk(self, index: int) -> np.ndarray:
        # every chunk has its own stream, so cell k is reachable without drawing cells < k
        rng = np.random.default_rng([self.spec.seed, index])
        a = abs(self.spec.amplitude)
        return rng.uniform(-a, a, NOISE_CHUNK)

    def _cell_value(self, k: int) -> float:
        return float(self._chunk(k // NOISE_CHUNK)[k % NOISE_CHUNK])

    def __call__(self, t: float) -> float:
        if t < 0.0:
            raise DisturbanceRangeError(f"disturbance requested at t={t:g} < 0; use the pre-history residual")
        s = self.spec
        if s.kind == "zero":
            v = 0.0
        elif s.kind == "constant":
            v = s.amplitude
        elif s.kind == "sinusoid":
            v = s.amplitude * math.sin(2.0 * math.pi * s.frequency * t + s.phase)
        elif s.kind == "uniform_noise":
            v = self._cell_value(int(math.floor(t / self.cell + _CELL_SNAP)))
        else:
            if t < self._tt[0] or t > self._tt[-1]:
                raise DisturbanceRangeError(
                    f"t={t:g} outside disturbance table [{self._tt[0]:g}, {self._tt[-1]:g}]"
                )
            v = float(np.interp(t, self._tt, self._td))
        if abs(v) > s.sup * (1 + 1e-12):
            raise RejectedInputError(f"|d({t:g})| = {abs(v):g} exceeds d_sup = {s.sup:g}")
        return v

    def stage_values(self, t: float, h: float) -> Tuple[float, float]:
        """Disturbance at the two Heun stages of the step [t, t+h]."""
        if self.spec.kind == "uniform_noise":
            v = self(t + 0.5 * h)
            return v, v
        return self(t), self(t + h)

    def sample(self, times: np.ndarray) -> np.ndarray:
        return np.array([self(float(t)) for t in times])


def disturbance_eval(spec: DisturbanceSpec, t: float, h: float | None = None) -> float:
    return Disturbance(spec, h)(t)


def prehistory_disturbance(x0: np.ndarray, u0: np.ndarray, theta: float, h: float) -> np.ndarray:
    """d = x' - theta x - u on [-r, 0] from the initial profiles (central differences, one-sided at the ends)."""
    x0 = np.asarray(x0, dtype=float)
    return np.gradient(x0, h, edge_order=1) - theta * x0 - np.asarray(u0, dtype=float)

from __future__ import annotations
from typing import Tuple

import numpy as np

from .errors import InvalidConfigError
from .schemas import InitialProfileSpec
from .window import HistoryWindow


def steep_ramp(s: np.ndarray, r: float, n: int, amplitude: float) -> np.ndarray:
    """Zero on [-r, -r/(n+1)], then linear up to `amplitude` at s = 0."""
    return amplitude * np.maximum(0.0, 1.0 + (n + 1) * s / r)


def initial_state_profile(spec: InitialProfileSpec, r: float, n: int, eps: float) -> HistoryWindow:
    if spec.x0 == "constant":
        return HistoryWindow.constant(spec.x0_value, r, n)
    if spec.x0 == "ramp":
        return HistoryWindow.from_function(
            lambda s: spec.x0_start + (spec.x0_end - spec.x0_start) * (s + r) / r, r, n)
    if spec.x0 == "steep_ramp":
        amp = eps if spec.amplitude is None else spec.amplitude
        return HistoryWindow.from_function(lambda s: steep_ramp(s, r, spec.n, amp), r, n)
    if len(spec.x0_table) != n + 1:
        raise InvalidConfigError("initial.x0_table", f"expected {n + 1} samples, got {len(spec.x0_table)}")
    return HistoryWindow(np.asarray(spec.x0_table, dtype=float), r / n)


def initial_input_interior(spec: InitialProfileSpec, n: int) -> np.ndarray:
    """Input samples at -r, ..., -h; the sample at 0 is fixed by the feedback law."""
    if spec.u0 == "constant":
        return np.full(n, float(spec.u0_value))
    if len(spec.u0_table) != n:
        raise InvalidConfigError("initial.u0_table", f"expected {n} samples, got {len(spec.u0_table)}")
    return np.asarray(spec.u0_table, dtype=float)


def initial_profiles(spec: InitialProfileSpec, r: float, n: int, eps: float) -> Tuple[HistoryWindow, np.ndarray]:
    return initial_state_profile(spec, r, n, eps), initial_input_interior(spec, n)

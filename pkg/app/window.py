"""
Sliding history windows on a fixed grid.

A window holds the N+1 samples of a signal at t-r, t-r+h, ..., t. Every functional of the
closed loop (norms, inner products, the adaptive gain) is evaluated on windows, always with
the composite trapezoid rule so the current-instant sample carries weight h/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .errors import IncompatibleWindowsError, RejectedInputError

_GRID_RTOL = 1e-9


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HistoryWindow:
    samples: np.ndarray
    h: float
    t_end: float = 0.0

    def __post_init__(self):
        arr = _frozen(self.samples)
        if arr.ndim != 1 or arr.size < 2:
            raise RejectedInputError("a window needs at least two samples (N >= 1)")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise RejectedInputError(f"step size must be positive and finite, got {self.h}")
        if not np.all(np.isfinite(arr)):
            raise RejectedInputError("window samples must be finite")
        object.__setattr__(self, "samples", arr)

    # ---------- constructors ----------
    @classmethod
    def constant(cls, value: float, r: float, n: int, t_end: float = 0.0) -> "HistoryWindow":
        return cls(np.full(n + 1, float(value)), r / n, t_end)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], r: float, n: int,
                      t_end: float = 0.0) -> "HistoryWindow":
        """Sample fn on the relative grid s = -r, ..., 0."""
        s = np.linspace(-r, 0.0, n + 1)
        return cls(np.broadcast_to(fn(s), s.shape), r / n, t_end)

    @classmethod
    def zeros_like(cls, other: "HistoryWindow") -> "HistoryWindow":
        return cls(np.zeros_like(other.samples), other.h, other.t_end)

    # ---------- grid facts ----------
    @property
    def n(self) -> int:
        return self.samples.size - 1

    @property
    def r(self) -> float:
        return self.n * self.h

    @property
    def newest(self) -> float:
        return float(self.samples[-1])

    @property
    def oldest(self) -> float:
        return float(self.samples[0])

    def same_grid(self, other: "HistoryWindow") -> bool:
        return (self.n == other.n
                and math.isclose(self.h, other.h, rel_tol=_GRID_RTOL)
                and math.isclose(self.t_end, other.t_end, rel_tol=_GRID_RTOL, abs_tol=_GRID_RTOL * self.h))

    def push(self, v: float) -> "HistoryWindow":
        return push(self, v)


def push(w: HistoryWindow, v: float) -> HistoryWindow:
    if not math.isfinite(v):
        raise RejectedInputError(f"cannot push non-finite sample {v!r} at t={w.t_end + w.h:g}")
    arr = np.empty_like(w.samples)
    arr[:-1] = w.samples[1:]
    arr[-1] = v
    return HistoryWindow(arr, w.h, w.t_end + w.h)


def _check_pair(w1: HistoryWindow, w2: HistoryWindow) -> None:
    if not w1.same_grid(w2):
        raise IncompatibleWindowsError(
            f"windows on different grids (n={w1.n}/{w2.n}, h={w1.h:g}/{w2.h:g}, "
            f"t_end={w1.t_end:g}/{w2.t_end:g})"
        )


def l2_norm_sq(w: HistoryWindow) -> float:
    return float(trapezoid(w.samples * w.samples, dx=w.h))


def inner(w1: HistoryWindow, w2: HistoryWindow) -> float:
    _check_pair(w1, w2)
    return float(trapezoid(w1.samples * w2.samples, dx=w1.h))


def l1_norm(w: HistoryWindow) -> float:
    return float(trapezoid(np.abs(w.samples), dx=w.h))


def sup_norm(w: HistoryWindow) -> float:
    return float(np.max(np.abs(w.samples)))


def derivative_norms(w: HistoryWindow) -> Tuple[float, float]:
    """(sup, L2) norms of the forward difference quotients."""
    slopes = np.diff(w.samples) / w.h
    return float(np.max(np.abs(slopes))), float(math.sqrt(np.sum(slopes * slopes) * w.h))

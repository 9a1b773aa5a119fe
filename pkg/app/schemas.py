from __future__ import annotations
import math
from typing import Annotated, Any, Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


# Base configuration for all models
class BaseModelWithConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


Positive = Annotated[float, Field(gt=0, allow_inf_nan=False)]
NonNegative = Annotated[float, Field(ge=0, allow_inf_nan=False)]
Finite = Annotated[float, Field(allow_inf_nan=False)]

CHECK_NAMES: Tuple[str, ...] = (
    "state_bound",
    "post_delay_state_bound",
    "input_bound",
    "identity",
    "identifier_bound",
    "lyapunov_decay",
    "feedback_identity",
    "control_sign",
    "feedback_consistency",
)

SWEEPABLE_AXES: Dict[str, Tuple[str, str]] = {
    "theta": ("plant", "theta"),
    "c": ("controller", "c"),
    "eps": ("controller", "eps"),
    "sigma": ("controller", "sigma"),
    "amplitude": ("disturbance", "amplitude"),
    "h": ("simulation", "h"),
}


def default_omega(c: float, r: float) -> float:
    return min(c, math.log(2.0) / (2.0 * r))


class PlantParams(BaseModelWithConfig):
    theta: Finite


class ControllerConfig(BaseModelWithConfig):
    eps: Positive
    c: Positive
    r: Positive
    sigma: Positive
    omega: Optional[Finite] = None
    fp_tol: Positive = 1e-12
    fp_max_iter: Annotated[int, Field(ge=0)] = 50
    blowup_limit: Positive = 1e12
    tie_tol: NonNegative = 1e-12
    denom_floor: NonNegative = 1e-300

    @model_validator(mode="before")
    @classmethod
    def _fill_omega(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("omega") is None:
            c, r = data.get("c"), data.get("r")
            if isinstance(c, (int, float)) and isinstance(r, (int, float)) and c > 0 and r > 0:
                data = {**data, "omega": default_omega(float(c), float(r))}
        return data

    @model_validator(mode="after")
    def _decay_rate(self) -> "ControllerConfig":
        w = self.omega
        if w is None or not (0 < w <= self.c):
            raise ValueError(f"omega must lie in (0, c] = (0, {self.c:g}], got {w}")
        if math.exp(w * self.r) >= 2.0:
            raise ValueError(
                f"decay-rate constraint violated: exp(omega*r) = {math.exp(w * self.r):.6g} >= 2"
            )
        return self


DisturbanceKind = Literal["zero", "constant", "sinusoid", "uniform_noise", "table"]


class DisturbanceSpec(BaseModelWithConfig):
    """
    zero:          d = 0
    constant:      d = amplitude
    sinusoid:      d = amplitude * sin(2*pi*frequency*t + phase)
    uniform_noise: piecewise constant on cells of width `cell`, uniform in [-amplitude, amplitude]
    table:         linear interpolation of (table_t, table_d)
    """
    kind: DisturbanceKind = "zero"
    amplitude: Finite = 0.0
    frequency: NonNegative = 0.0
    phase: Finite = 0.0
    seed: int = 0
    cell: Optional[Positive] = None
    table_t: Tuple[Finite, ...] = ()
    table_d: Tuple[Finite, ...] = ()
    d_sup: Optional[NonNegative] = None

    @model_validator(mode="after")
    def _check(self) -> "DisturbanceSpec":
        if self.kind == "table":
            if len(self.table_t) < 2 or len(self.table_t) != len(self.table_d):
                raise ValueError("table disturbance needs matching table_t/table_d of length >= 2")
            if any(b <= a for a, b in zip(self.table_t, self.table_t[1:])):
                raise ValueError("table_t must be strictly increasing")
        derived = self.derived_sup()
        if self.d_sup is not None and self.d_sup < derived * (1 - 1e-12):
            raise ValueError(f"declared d_sup={self.d_sup:g} is below the generated sup {derived:g}")
        return self

    def derived_sup(self) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "table":
            return max(abs(v) for v in self.table_d)
        return abs(self.amplitude)

    @property
    def sup(self) -> float:
        return self.derived_sup() if self.d_sup is None else self.d_sup

    @property
    def roughness(self) -> float:
        """Size of the jumps and kinks that cost a quadrature order: sup|d| for noise and tables."""
        return self.sup if self.kind in ("uniform_noise", "table") else 0.0


ProfileKind = Literal["constant", "ramp", "steep_ramp", "table"]


class InitialProfileSpec(BaseModelWithConfig):
    """
    Initial histories on [-r, 0]. `steep_ramp` is the family that is zero on
    [-r, -r/(n+1)] and rises linearly to `amplitude` (default eps) at s = 0.
    """
    theta_hat0: Finite
    x0: ProfileKind = "constant"
    x0_value: Finite = 1.0
    x0_start: Finite = 0.0
    x0_end: Finite = 1.0
    n: Annotated[int, Field(ge=1)] = 1
    amplitude: Optional[Finite] = None
    x0_table: Tuple[Finite, ...] = ()
    x0_dot_sup: Optional[NonNegative] = None
    u0: Literal["constant", "table"] = "constant"
    u0_value: Finite = 0.0
    u0_table: Tuple[Finite, ...] = ()


class SimulationSpec(BaseModelWithConfig):
    t_final: NonNegative
    h: Optional[Positive] = None
    steps_per_delay: Annotated[int, Field(ge=1)] = 1000
    identify: bool = True


class OutputSpec(BaseModelWithConfig):
    directory: str = "./runs"
    write_trace: bool = True


class ChecksSpec(BaseModelWithConfig):
    enabled: Tuple[str, ...] = CHECK_NAMES

    @model_validator(mode="after")
    def _known(self) -> "ChecksSpec":
        unknown = [c for c in self.enabled if c not in CHECK_NAMES]
        if unknown:
            raise ValueError(f"unknown check(s) {unknown}; known: {list(CHECK_NAMES)}")
        return self


class ScenarioConfig(BaseModelWithConfig):
    name: str = "scenario"
    plant: PlantParams
    controller: ControllerConfig
    disturbance: DisturbanceSpec = DisturbanceSpec()
    initial: InitialProfileSpec
    simulation: SimulationSpec
    output: OutputSpec = OutputSpec()
    checks: ChecksSpec = ChecksSpec()

    @property
    def h(self) -> float:
        if self.simulation.h is not None:
            return self.simulation.h
        return self.controller.r / self.simulation.steps_per_delay

    @property
    def n(self) -> int:
        """Samples per delay window minus one."""
        return int(round(self.controller.r / self.h))

    @property
    def steps(self) -> int:
        return int(round(self.simulation.t_final / self.h))


class BoundReport(BaseModelWithConfig):
    bound_name: str
    constant_values: Dict[str, float] = {}
    worst_margin: float
    worst_time: Optional[float] = None
    tolerance: NonNegative
    passed: bool
    details: Dict[str, Any] = {}

    @model_validator(mode="after")
    def _verdict(self) -> "BoundReport":
        if self.passed != (self.worst_margin >= -self.tolerance):
            raise ValueError("passed must equal worst_margin >= -tolerance")
        return self

    @classmethod
    def judge(cls, bound_name: str, worst_margin: float, tolerance: float,
              worst_time: Optional[float] = None, constant_values: Optional[Dict[str, float]] = None,
              details: Optional[Dict[str, Any]] = None) -> "BoundReport":
        return cls(
            bound_name=bound_name,
            constant_values=constant_values or {},
            worst_margin=worst_margin,
            worst_time=worst_time,
            tolerance=tolerance,
            passed=bool(worst_margin >= -tolerance),
            details=details or {},
        )


class SweepRow(BaseModelWithConfig):
    axis: str
    value: float
    final_abs_x: float
    max_abs_x_after_r: float
    theta_error_final: float
    identifier_bound: float
    state_gain: float
    margins: Dict[str, float]
    passed: bool


class ConvergenceRow(BaseModelWithConfig):
    h: float
    identity_residual: float
    self_distance: Optional[float] = None
    order: Optional[float] = None


class ErrorResponse(BaseModelWithConfig):
    """Standard error payload"""
    error: str
    detail: Optional[str] = None
    code: Optional[str] = None
    path: Optional[str] = None
    time: Optional[float] = None


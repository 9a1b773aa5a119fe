from __future__ import annotations
from typing import Any, Dict, Optional


class HarnessError(Exception):
    """Base error. `code` is stable and machine-readable, `detail` is for humans."""
    code = "harness_error"

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_response(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "detail": self.detail, "code": self.code}


# ---------- windows / control law ----------
class RejectedInputError(HarnessError):
    code = "rejected_input"

class IncompatibleWindowsError(HarnessError):
    code = "incompatible_windows"

class DegenerateWindowError(HarnessError):
    code = "degenerate_window"

class ZeroExcitationError(HarnessError):
    code = "zero_excitation"

# ---------- identifier ----------
class SequencingError(HarnessError):
    code = "sequencing"

# ---------- simulation ----------
class DisturbanceRangeError(HarnessError):
    code = "disturbance_range"

class CompatibilityUnsolvableError(HarnessError):
    code = "compatibility_unsolvable"

class _TimedError(HarnessError):
    def __init__(self, detail: str, time: Optional[float] = None, **context: Any):
        super().__init__(detail, **context)
        self.time = time

    def to_response(self) -> Dict[str, Any]:
        out = super().to_response()
        out["time"] = self.time
        return out

class BlowUpError(_TimedError):
    code = "blow_up"

class StepFailureError(_TimedError):
    code = "step_failure"

# ---------- verification ----------
class PreconditionError(HarnessError):
    code = "precondition"

class GridMismatchError(HarnessError):
    code = "grid_mismatch"


# ---------- configuration ----------
class ConfigError(HarnessError):
    """Configuration problem at `path` (dotted key path)."""
    code = "config_error"

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}" if path else reason)
        self.path = path
        self.reason = reason

    def to_response(self) -> Dict[str, Any]:
        out = super().to_response()
        out["path"] = self.path
        return out

class UnknownKeyError(ConfigError):
    code = "unknown_key"

class MissingKeyError(ConfigError):
    code = "missing_key"

class InvalidConfigError(ConfigError):
    code = "invalid_config"

class GridError(ConfigError):
    code = "grid"

class UnsweepableAxisError(ConfigError):
    code = "unsweepable_axis"


# CLI exit statuses
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_SIMULATION_ERROR = 3


def exit_status_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG_ERROR
    return EXIT_SIMULATION_ERROR

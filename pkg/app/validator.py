# app/validator.py
from __future__ import annotations
from typing import Any, Dict, List

import jsonschema

from .errors import ConfigError, InvalidConfigError, MissingKeyError, UnknownKeyError
from .schemas import CHECK_NAMES

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_NUM_LIST = {"type": "array", "items": _NUM}


def _section(properties: Dict[str, Any], required: List[str] | None = None) -> Dict[str, Any]:
    return {
        "type": "object",
        "properties": properties,
        "required": required or [],
        "additionalProperties": False,
    }


SCENARIO_SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["plant", "controller", "initial", "simulation"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "plant": _section({"theta": _NUM}, ["theta"]),
        "controller": _section(
            {
                "eps": _NUM, "c": _NUM, "r": _NUM, "sigma": _NUM, "omega": _NUM,
                "fp_tol": _NUM, "fp_max_iter": _INT, "blowup_limit": _NUM,
                "tie_tol": _NUM, "denom_floor": _NUM,
            },
            ["eps", "c", "r", "sigma"],
        ),
        "disturbance": _section(
            {
                "kind": {"enum": ["zero", "constant", "sinusoid", "uniform_noise", "table"]},
                "amplitude": _NUM, "frequency": _NUM, "phase": _NUM, "seed": _INT, "cell": _NUM,
                "table_t": _NUM_LIST, "table_d": _NUM_LIST, "d_sup": _NUM,
            }
        ),
        "initial": _section(
            {
                "theta_hat0": _NUM,
                "x0": {"enum": ["constant", "ramp", "steep_ramp", "table"]},
                "x0_value": _NUM, "x0_start": _NUM, "x0_end": _NUM, "n": _INT, "amplitude": _NUM,
                "x0_table": _NUM_LIST, "x0_dot_sup": _NUM,
                "u0": {"enum": ["constant", "table"]},
                "u0_value": _NUM, "u0_table": _NUM_LIST,
            },
            ["theta_hat0"],
        ),
        "simulation": _section(
            {"t_final": _NUM, "h": _NUM, "steps_per_delay": _INT, "identify": {"type": "boolean"}},
            ["t_final"],
        ),
        "output": _section({"directory": {"type": "string"}, "write_trace": {"type": "boolean"}}),
        "checks": _section({"enabled": {"type": "array", "items": {"enum": list(CHECK_NAMES)}}}),
    },
}


def _dotted(parts) -> str:
    return ".".join(str(p) for p in parts)


def _to_config_error(err: jsonschema.ValidationError) -> ConfigError:
    where = list(err.absolute_path)
    if err.validator == "additionalProperties":
        known = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in known)
        return UnknownKeyError(_dotted(where + extra[:1]), f"unknown key (allowed: {', '.join(sorted(known))})")
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        return MissingKeyError(_dotted(where + missing[:1]), "required key is missing")
    return InvalidConfigError(_dotted(where), err.message)


def scenario_errors(raw: Dict[str, Any]) -> List[ConfigError]:
    """Schema diagnostics in a stable order (by key path, then message)."""
    v = jsonschema.Draft7Validator(SCENARIO_SCHEMA)
    errs = sorted(v.iter_errors(raw), key=lambda e: (_dotted(e.absolute_path), e.message))
    return [_to_config_error(e) for e in errs]

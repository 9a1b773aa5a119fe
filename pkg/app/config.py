from __future__ import annotations
import copy, logging, os, threading
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .utils import merge_deep

log = logging.getLogger(__name__)

_CONFIG: Optional[Dict[str, Any]] = None
_LOCK = threading.Lock()

DEFAULT_PATH = "./config/harness.yaml"

# Used when the settings file is missing or unreadable.
BUILTIN: Dict[str, Any] = {
    "defaults": {
        "controller": {
            "fp_tol": 1e-12,
            "fp_max_iter": 50,
            "blowup_limit": 1e12,
            "tie_tol": 1e-12,
            "denom_floor": 1e-300,
        },
        "simulation": {"steps_per_delay": 1000, "identify": True},
        "output": {"directory": "./runs"},
    },
    "calibration": {},
    "batch": {
        "windows": 10000,
        "resolution": 64,
        "seed": 20240601,
        "max_value": 1e3,
        "max_slope": 1e3,
        "radii": [0.5, 1.0, 5.0],
        "eps_values": [0.1, 1.0, 10.0],
    },
    "sweep": {"workers": 4},
    "logging": {"level": "INFO"},
}

DEFAULT_CALIBRATION = {"floor": 1e-9, "a": 10.0, "b": 1.0}


def _load() -> Dict[str, Any]:
    load_dotenv()
    path = os.getenv("HARNESS_CONFIG", DEFAULT_PATH)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError:
        data = {}
    except yaml.YAMLError as e:
        log.warning("invalid YAML in %s, using built-in settings: %s", path, e)
        data = {}
    if not isinstance(data, dict):
        log.warning("settings file %s is not a mapping, using built-in settings", path)
        data = {}
    return merge_deep(copy.deepcopy(BUILTIN), data)


def get_config(force: bool = False) -> Dict[str, Any]:
    global _CONFIG
    with _LOCK:
        if force or _CONFIG is None:
            _CONFIG = _load()
        return _CONFIG


def reload_config() -> Dict[str, Any]:
    return get_config(force=True)


def calibration_for(check: str) -> Dict[str, float]:
    entry = get_config().get("calibration", {}).get(check) or {}
    return {**DEFAULT_CALIBRATION, **entry}


def output_dir_override() -> Optional[Path]:
    """HARNESS_OUTPUT_DIR wins over every scenario's output directory."""
    load_dotenv()
    value = os.getenv("HARNESS_OUTPUT_DIR")
    return Path(value) if value else None

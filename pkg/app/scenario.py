from __future__ import annotations
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import ValidationError

from .checks import run_checks
from .config import get_config, output_dir_override
from .errors import ConfigError, GridError, HarnessError, InvalidConfigError
from .profiles import initial_profiles
from .reports import write_reports
from .schemas import BoundReport, ScenarioConfig
from .simulation import SimulationTrace, run
from .trace_io import write_identifier_log, write_trace_csv
from .utils import is_grid_multiple, merge_deep
from .validator import scenario_errors

log = logging.getLogger(__name__)


def _defaults() -> Dict[str, Any]:
    d = get_config().get("defaults", {})
    return {k: dict(d.get(k) or {}) for k in ("controller", "simulation", "output")}


def _from_validation_error(e: ValidationError) -> InvalidConfigError:
    first = e.errors()[0]
    path = ".".join(str(p) for p in first.get("loc", ()))
    reason = first.get("msg", str(e)).removeprefix("Value error, ")
    return InvalidConfigError(path, reason)


def build_config(raw: Dict[str, Any], name: Optional[str] = None) -> ScenarioConfig:
    """Validate a raw scenario mapping, fill defaults and check grid compatibility."""
    if not isinstance(raw, dict):
        raise InvalidConfigError("", "scenario must be a mapping of sections")
    errors = scenario_errors(raw)
    if errors:
        raise errors[0]
    merged = merge_deep(_defaults(), raw)
    if name and "name" not in raw:
        merged["name"] = name
    try:
        cfg = ScenarioConfig.model_validate(merged)
    except ValidationError as e:
        raise _from_validation_error(e) from None
    check_grid(cfg)
    return cfg


def check_grid(cfg: ScenarioConfig) -> None:
    h, r = cfg.h, cfg.controller.r
    if not is_grid_multiple(r, h):
        raise GridError("simulation.h", f"h={h:g} does not divide the delay r={r:g}")
    if not is_grid_multiple(cfg.simulation.t_final, h):
        raise GridError("simulation.t_final", f"t_final={cfg.simulation.t_final:g} is not a multiple of h={h:g}")
    ini, n = cfg.initial, cfg.n
    if ini.x0 == "table" and len(ini.x0_table) != n + 1:
        raise InvalidConfigError("initial.x0_table", f"expected {n + 1} samples for h={h:g}, got {len(ini.x0_table)}")
    if ini.u0 == "table" and len(ini.u0_table) != n:
        raise InvalidConfigError("initial.u0_table", f"expected {n} samples for h={h:g}, got {len(ini.u0_table)}")


def parse_config(text: str, name: Optional[str] = None) -> ScenarioConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise InvalidConfigError("", f"not valid YAML: {e}") from None
    return build_config(raw if raw is not None else {}, name)


def load_scenario(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidConfigError("", f"cannot read {p}: {e.strerror}") from None
    return parse_config(text, name=p.stem)


def output_dir(cfg: ScenarioConfig) -> Path:
    base = output_dir_override() or Path(cfg.output.directory)
    return base / cfg.name


def simulate(cfg: ScenarioConfig, identify: Optional[bool] = None) -> SimulationTrace:
    x0, u0 = initial_profiles(cfg.initial, cfg.controller.r, cfg.n, cfg.controller.eps)
    meta = {
        "scenario": cfg.name,
        "plant": cfg.plant.model_dump(),
        "controller": cfg.controller.model_dump(),
        "disturbance": cfg.disturbance.model_dump(),
    }
    try:
        return run(cfg.plant, cfg.controller, cfg.disturbance, x0, u0, cfg.initial.theta_hat0,
                   cfg.simulation.t_final,
                   identify=cfg.simulation.identify if identify is None else identify,
                   metadata=meta)
    except ConfigError:
        raise
    except HarnessError as e:
        e.context.setdefault("scenario", cfg.name)
        log.error("scenario %s: %s", cfg.name, e.detail)
        raise


def verify(trace: SimulationTrace, cfg: ScenarioConfig) -> List[BoundReport]:
    return run_checks(trace, cfg.plant, cfg.controller, cfg.disturbance, cfg.checks.enabled,
                      x0_dot_sup=cfg.initial.x0_dot_sup)


def run_scenario(cfg: ScenarioConfig, write: bool = True) -> Tuple[SimulationTrace, List[BoundReport]]:
    trace = simulate(cfg)
    reports = verify(trace, cfg)
    if write:
        out = output_dir(cfg)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.output.write_trace:
            write_trace_csv(trace, out / "trace.csv")
            write_identifier_log(trace.update_log, out / "identifier_log.jsonl")
        write_reports(reports, out)
        log.info("scenario %s written to %s", cfg.name, out)
    return trace, reports

# tests/conftest.py
import os
import pathlib

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
os.environ["HARNESS_CONFIG"] = str(ROOT / "config" / "harness.yaml")

from app.config import reload_config  # noqa: E402
from app.schemas import ControllerConfig, DisturbanceSpec, PlantParams  # noqa: E402
from app.simulation import run  # noqa: E402
from app.window import HistoryWindow  # noqa: E402


@pytest.fixture(scope="session", autouse=True)
def harness_settings():
    """Point the harness at the repository settings file."""
    os.environ["HARNESS_CONFIG"] = str(ROOT / "config" / "harness.yaml")
    return reload_config()


@pytest.fixture
def anyio_backend():
    return "asyncio"


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("HARNESS_OUTPUT_DIR", str(tmp_path / "runs"))
    return tmp_path / "runs"


@pytest.fixture(scope="session")
def unit_cfg():
    return ControllerConfig(eps=1.0, c=1.0, r=1.0, sigma=1.0)


@pytest.fixture(scope="session")
def decay_cfg():
    return ControllerConfig(eps=0.1, c=1.0, r=1.0, sigma=0.05)


@pytest.fixture(scope="session")
def plant():
    return PlantParams(theta=1.0)


@pytest.fixture(scope="session")
def decay_trace(decay_cfg, plant):
    """theta=1, c=1, r=1, eps=0.1, x0 = 1, d = 0 on a 200-step delay grid."""
    n = 200
    x0 = HistoryWindow.constant(1.0, 1.0, n)
    return run(plant, decay_cfg, DisturbanceSpec(), x0, np.zeros(n), 0.0, 6.0)


@pytest.fixture(scope="session")
def zero_trace(decay_cfg, plant):
    n = 100
    x0 = HistoryWindow.constant(0.0, 1.0, n)
    return run(plant, decay_cfg, DisturbanceSpec(), x0, np.zeros(n), 0.0, 3.0)


SMALL_SCENARIO = """
plant:
  theta: 1.0
controller:
  eps: 0.1
  c: 1.0
  r: 1.0
  sigma: 0.05
initial:
  theta_hat0: 0.0
  x0_value: 1.0
simulation:
  t_final: 3.0
  steps_per_delay: 100
"""


@pytest.fixture
def small_scenario_text():
    return SMALL_SCENARIO


@pytest.fixture
def scenario_file(tmp_path):
    def write(text: str = SMALL_SCENARIO, name: str = "small") -> pathlib.Path:
        path = tmp_path / f"{name}.yaml"
        path.write_text(text, encoding="utf-8")
        return path
    return write

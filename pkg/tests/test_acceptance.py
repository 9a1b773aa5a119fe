"""End-to-end runs of the shipped scenarios and the parameter grids at full resolution."""
import pathlib
import re

import numpy as np
import pytest

from app.calibration import CALIBRATED_CHECKS, calibrate
from app.checks import check_identity, check_state_bound
from app.config import calibration_for
from app.constants import asymptotic_state_gain
from app.errors import BlowUpError
from app.profiles import initial_profiles
from app.property_checks import denominator_floor_batch, gain_lipschitz_batch, perturbed_pair
from app.scenario import load_scenario, parse_config, run_scenario, simulate, verify
from app.schemas import PlantParams
from app.studies import convergence_study, halved, observed_order
from app.trace_io import write_trace_csv

pytestmark = pytest.mark.slow

SCENARIOS = pathlib.Path(__file__).resolve().parents[1] / "config" / "scenarios"

GRID = """
plant:
  theta: {theta}
controller:
  eps: 0.1
  c: {c}
  r: 1.0
  sigma: {sigma}
disturbance:
  kind: {kind}
  amplitude: {d}
  seed: {seed}
initial:
  theta_hat0: 0.0
  x0: {x0}
  x0_value: 1.0
  x0_start: 0.5
  x0_end: 2.0
simulation:
  t_final: {t_final}
  steps_per_delay: {steps}
checks:
  enabled: [{checks}]
"""


def scenario(name):
    return load_scenario(SCENARIOS / f"{name}.yaml")


def shortened(name, t_final):
    text = (SCENARIOS / f"{name}.yaml").read_text()
    text = re.sub(r"t_final: [0-9.]+", f"t_final: {t_final}", text)
    return parse_config(text, name=name)


def grid_scenario(theta=1.0, c=1.0, d=0.0, seed=0, sigma=0.05, x0="constant", t_final=4.0,
                  steps=200, checks="state_bound"):
    kind = "uniform_noise" if d > 0.0 else "zero"
    text = GRID.format(theta=float(theta), c=float(c), sigma=float(sigma), kind=kind, d=float(d),
                       seed=seed, x0=x0, t_final=float(t_final), steps=steps, checks=checks)
    return parse_config(text, name=f"grid-{theta}-{c}-{d}-{seed}")


def test_canonical(out_dir):
    cfg = scenario("canonical")
    trace, reports = run_scenario(cfg)
    assert all(r.passed for r in reports), [r.bound_name for r in reports if not r.passed]
    by_name = {r.bound_name: r for r in reports}
    assert by_name["identity"].details["worst_residual"] <= 1e-5
    late = trace.t >= 2.0
    assert np.max(np.abs(trace.theta_hat[late] - 1.0)) <= 1e-3
    assert abs(trace.x[-1]) <= cfg.controller.eps


def test_identification_error_shrinks_fourfold_per_halving():
    cfg = shortened("canonical", 3.0)
    errors = []
    for j in range(2):
        level = halved(cfg, j)
        trace = simulate(level)
        errors.append(float(np.max(np.abs(trace.theta_hat[trace.t >= 2.0] - 1.0))))
    assert errors[1] > 0.0
    assert errors[0] / errors[1] >= 3.8


@pytest.mark.parametrize("name", ["zero", "noisy", "sinusoid"])
def test_shipped_scenarios_pass(name, out_dir):
    _, reports = run_scenario(scenario(name))
    assert all(r.passed for r in reports), [r.bound_name for r in reports if not r.passed]


def test_blowup_scenario():
    with pytest.raises(BlowUpError) as info:
        simulate(scenario("blowup"))
    assert info.value.time == 0.0


@pytest.mark.parametrize("name", ["canonical", "noisy", "sinusoid"])
def test_fixed_point_and_non_interference(name):
    cfg = shortened(name, 3.0)
    trace = simulate(cfg)
    assert int(np.max(trace.fp_iterations)) <= 50
    assert float(np.max(trace.fp_residuals)) <= 1e-12
    blind = simulate(cfg, identify=False)
    for col in ("t", "x", "u", "p", "d"):
        assert np.array_equal(getattr(trace, col), getattr(blind, col)), col


def test_seeded_noise_trace_is_byte_identical(tmp_path):
    cfg = shortened("noisy", 2.0)
    write_trace_csv(simulate(cfg), tmp_path / "first.csv")
    write_trace_csv(simulate(cfg), tmp_path / "second.csv")
    assert (tmp_path / "first.csv").read_bytes() == (tmp_path / "second.csv").read_bytes()


@pytest.mark.parametrize("theta", [-2.0, 0.0, 1.0, 3.0])
@pytest.mark.parametrize("c", [1.0, 2.0])
@pytest.mark.parametrize("d", [0.0, 0.1, 1.0, 10.0])
def test_state_input_and_lyapunov_grid(theta, c, d):
    checks = "state_bound, post_delay_state_bound, input_bound, lyapunov_decay"
    for seed in range(1, 6):
        cfg = grid_scenario(theta, c, d, seed, checks=checks)
        reports = verify(simulate(cfg), cfg)
        failed = [r.bound_name for r in reports if not r.passed]
        assert failed == [], (theta, c, d, seed, failed)
        state = next(r for r in reports if r.bound_name == "state_bound")
        radius = 0.1 + asymptotic_state_gain(cfg.controller) * d
        assert state.details["asymptotic_radius"] == pytest.approx(radius)


@pytest.mark.parametrize("sigma", [0.05, 0.5])
@pytest.mark.parametrize("d", [0.1, 1.0])
def test_identifier_grid(sigma, d):
    for seed in range(20):
        cfg = grid_scenario(d=d, seed=seed, sigma=sigma, x0="ramp", checks="identifier_bound")
        rep = verify(simulate(cfg), cfg)[0]
        assert rep.passed, (sigma, d, seed, rep.worst_margin, rep.tolerance)
        assert "note" not in rep.details and rep.details["updates"] > 0
        assert rep.constant_values["bound"] == pytest.approx(d / sigma)


def test_identity_rejects_wrong_theta_under_loud_noise():
    cfg = grid_scenario(theta=3.0, d=10.0, seed=5, t_final=3.0, steps=1000, checks="identity")
    trace = simulate(cfg)
    right = check_identity(trace, cfg.plant, cfg.disturbance)
    assert right.passed, (right.details, right.tolerance)
    for wrong in (4.0, 5.0):
        assert not check_identity(trace, PlantParams(theta=wrong), cfg.disturbance).passed
    state = check_state_bound(trace, cfg.plant, cfg.controller, cfg.disturbance)
    assert state.tolerance < cfg.controller.eps


@pytest.mark.parametrize("delta", [1e-6, 1e-4])
@pytest.mark.parametrize("T", [1.0, 2.0])
def test_continuity_pairs(delta, T):
    cfg = grid_scenario(steps=200)
    x0, u0 = initial_profiles(cfg.initial, cfg.controller.r, cfg.n, cfg.controller.eps)
    rep = perturbed_pair(cfg.plant, cfg.controller, cfg.disturbance, x0, u0, 0.0, delta, T)
    assert rep.passed
    assert rep.details["initial_distance"] >= 0.99 * delta
    assert rep.details["max_amplification"] <= rep.constant_values["Q"]


def test_smooth_convergence_order():
    assert observed_order(convergence_study(shortened("canonical", 3.0), 2)) >= 1.9


def test_noise_convergence_order():
    assert observed_order(convergence_study(shortened("noisy", 3.0), 2)) >= 0.9


def test_shipped_calibration_covers_measurement(out_dir):
    text = (SCENARIOS / "canonical.yaml").read_text()
    text = text.replace("t_final: 10.0", "t_final: 4.0").replace("h: 0.001", "h: 0.004")
    cfg = parse_config(text, name="canonical")
    measured = calibrate(cfg, halvings=2, safety=1.0)
    assert set(measured) == set(CALIBRATED_CHECKS)
    for name, ab in measured.items():
        shipped = calibration_for(name)
        assert shipped["a"] >= ab["a"], (name, ab)
        assert shipped["b"] >= ab["b"], (name, ab)


def test_denominator_floor_full_batch():
    assert all(r.passed and r.details["violations"] == 0 for r in denominator_floor_batch())


def test_gain_lipschitz_full_batch():
    cfg = scenario("canonical").controller.model_copy(update={"eps": 1.0})
    assert all(r.passed and r.details["violations"] == 0 for r in gain_lipschitz_batch(cfg))

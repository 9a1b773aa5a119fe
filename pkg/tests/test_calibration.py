import pytest

from app.calibration import CALIBRATED_CHECKS, calibrate, level_errors, with_noise
from app.errors import InvalidConfigError
from app.scenario import parse_config

COARSE = {"t_final: 3.0": "t_final: 2.0", "steps_per_delay: 100": "steps_per_delay: 50"}


def coarse(text, name="small"):
    for old, new in COARSE.items():
        text = text.replace(old, new)
    return parse_config(text, name=name)


@pytest.fixture
def small(small_scenario_text):
    return coarse(small_scenario_text)


@pytest.fixture
def resting(small_scenario_text):
    return coarse(small_scenario_text.replace("x0_value: 1.0", "x0_value: 0.0"), name="resting")


def test_with_noise_keeps_the_seed(small):
    noisy = with_noise(small, 0.2)
    assert noisy.disturbance.kind == "uniform_noise"
    assert noisy.disturbance.roughness == pytest.approx(0.2)
    assert noisy.disturbance.seed == small.disturbance.seed
    assert noisy.name == "small-noise"


@pytest.mark.parametrize("amplitude", [0.0, -1.0])
def test_with_noise_rejects_silent_noise(small, amplitude):
    with pytest.raises(InvalidConfigError):
        with_noise(small, amplitude)


def test_needs_two_halvings(small):
    with pytest.raises(InvalidConfigError):
        level_errors(small, 1)


def test_rejects_a_rough_scenario(small):
    with pytest.raises(InvalidConfigError):
        calibrate(with_noise(small, 0.1))


def test_state_at_rest_has_no_smooth_error(resting):
    errors = level_errors(resting, 2)
    assert set(errors) == set(CALIBRATED_CHECKS)
    for name, levels in errors.items():
        assert all(e.error == 0.0 for e in levels), name
        assert all(e.roughness == 0.0 for e in levels)


def test_bound_checks_skip_the_finest_level(resting):
    errors = level_errors(resting, 2)
    assert len(errors["state_bound"]) == 2
    assert len(errors["identity"]) == 3
    assert [e.h for e in errors["identity"]] == pytest.approx([0.02, 0.01, 0.005])


def test_measured_constants_scale_with_safety(small):
    measured = calibrate(small, halvings=2, safety=1.0)
    padded = calibrate(small, halvings=2, safety=4.0)
    assert set(measured) == set(CALIBRATED_CHECKS)
    for name, ab in measured.items():
        assert ab["a"] >= 0.0 and ab["b"] >= 0.0
        assert padded[name]["a"] == pytest.approx(4.0 * ab["a"])
        assert padded[name]["b"] == pytest.approx(4.0 * ab["b"])
    assert measured["state_bound"]["a"] > 0.0

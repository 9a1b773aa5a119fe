import math

import pytest

from app.constants import (
    STATE_GAIN,
    asymptotic_state_gain,
    continuity_gain,
    gain_lipschitz_constant,
    identifier_horizons,
    input_residual_gain,
    lipschitz_scale,
    quadratic_input_gain,
    state_overshoot,
)
from app.schemas import ControllerConfig, PlantParams


def ctl(**kw):
    base = dict(eps=1.0, c=1.0, r=1.0, sigma=1.0)
    return ControllerConfig(**{**base, **kw})


@pytest.mark.parametrize("theta, expected", [
    (1.0, 1.0),
    (-3.0, 1.0),
    (2.0, math.exp(2.0 + math.sqrt(2.0) / 2.0 - 2.0)),
])
def test_state_overshoot(theta, expected):
    assert state_overshoot(PlantParams(theta=theta), ctl()) == pytest.approx(expected)


def test_input_residual_gain():
    expected = 2.0 + 1.0 / (2.0 * math.sqrt(2.0)) + 4.0
    assert input_residual_gain(PlantParams(theta=-1.0), ctl()) == pytest.approx(expected)


def test_quadratic_input_gain():
    assert quadratic_input_gain(ctl()) == pytest.approx(362.0387, rel=1e-6)
    assert quadratic_input_gain(ctl(eps=2.0)) == pytest.approx(362.0387 / 2.0, rel=1e-6)


def test_asymptotic_state_gain():
    assert STATE_GAIN == pytest.approx(0.8409, abs=1e-4)
    assert asymptotic_state_gain(ctl(c=2.0, omega=0.3)) == pytest.approx(0.42045, abs=1e-5)


def test_lipschitz_constants():
    assert lipschitz_scale(1.0, ctl()) == pytest.approx(19.0)
    assert gain_lipschitz_constant(1.0, ctl()) == pytest.approx(11704.0)


def test_lipschitz_constant_grows_with_radius():
    values = [gain_lipschitz_constant(R, ctl()) for R in (0.5, 1.0, 5.0)]
    assert values == sorted(values)


def test_continuity_gain():
    plant = PlantParams(theta=1.0)
    small = continuity_gain(1e-3, 0.1, plant, ctl())
    assert 1.0 < small < continuity_gain(1e-3, 0.2, plant, ctl())
    assert continuity_gain(10.0, 10.0, plant, ctl()) == math.inf


@pytest.mark.parametrize("first_excited, expected", [
    (0.5, (1.0, 2.0)),
    (1.0, (1.0, 2.0)),
    (3.0, (3.0, 3.0)),
    (3.2, (4.0, 4.0)),
])
def test_identifier_horizons(first_excited, expected):
    assert identifier_horizons(1.0, first_excited) == pytest.approx(expected)

import math

import numpy as np
import pytest

from app.errors import GridMismatchError, PreconditionError
from app.profiles import steep_ramp
from app.property_checks import (
    continuity_check,
    denominator_floor_batch,
    denominator_floor_check,
    gain_lipschitz_batch,
    gain_lipschitz_check,
    pair_radius,
    perturbed_pair,
    random_windows,
)
from app.schemas import DisturbanceSpec, PlantParams
from app.simulation import run
from app.window import HistoryWindow


class TestDenominatorFloor:
    def test_zero_window(self, unit_cfg):
        rep = denominator_floor_check(HistoryWindow.constant(0.0, 1.0, 100), unit_cfg)
        assert rep.passed
        assert rep.details["lhs"] == pytest.approx(1.0)
        assert rep.details["sup_floor"] == pytest.approx(1.0 / 8.0)
        assert rep.details["l2_floor"] == pytest.approx(1.0 / 14.0)
        assert rep.worst_margin == pytest.approx(7.0 / 8.0)

    def test_window_on_the_ball_boundary(self, unit_cfg):
        rep = denominator_floor_check(HistoryWindow.constant(1.0, 1.0, 100), unit_cfg)
        assert rep.details["lhs"] == pytest.approx(1.0)
        assert rep.passed

    def test_steep_ramp(self, unit_cfg):
        w = HistoryWindow.from_function(lambda s: steep_ramp(s, 1.0, 1, 1.0), 1.0, 1000)
        rep = denominator_floor_check(w, unit_cfg)
        assert rep.passed
        assert rep.details["lhs"] == pytest.approx(1.0 / 6.0, abs=1e-5)
        assert rep.details["sup_floor"] == pytest.approx(1.0 / (8.0 * (2.0 * math.sqrt(2.0) + 1.0)), rel=1e-6)

    def test_random_windows_shape(self):
        x, r = random_windows(np.random.default_rng(0), 20, 16, 10.0, 5.0)
        assert x.shape == (20, 17) and r.shape == (20,)
        assert np.all(np.abs(x) <= 10.0)
        assert np.all((r >= 0.1) & (r <= 10.0))

    def test_batch(self):
        reports = denominator_floor_batch(count=500, seed=1)
        assert [r.constant_values["eps"] for r in reports] == [0.1, 1.0, 10.0]
        for rep in reports:
            assert rep.passed, rep.details
            assert rep.details["violations"] == 0
            assert rep.details["windows"] == 500


class TestGainLipschitz:
    def pair(self, scale=0.5, n=100):
        x = HistoryWindow.from_function(lambda s: scale * np.cos(s), 1.0, n)
        u = HistoryWindow.constant(-scale, 1.0, n)
        return x, u

    def test_identical_pairs(self, unit_cfg):
        rep = gain_lipschitz_check(self.pair(), self.pair(), 1.0, unit_cfg)
        assert rep.passed
        assert rep.details["lhs"] == 0.0
        assert rep.constant_values["L"] == pytest.approx(11704.0)

    def test_nearby_pairs(self, unit_cfg):
        rep = gain_lipschitz_check(self.pair(0.5), self.pair(0.49), 1.0, unit_cfg)
        assert rep.passed
        assert rep.details["distance"] > 0.0

    def test_precondition(self, unit_cfg):
        big = self.pair(scale=10.0)
        assert pair_radius(*big) > 1.0
        with pytest.raises(PreconditionError):
            gain_lipschitz_check(big, self.pair(), 1.0, unit_cfg)

    def test_batch(self, unit_cfg):
        reports = gain_lipschitz_batch(unit_cfg, count=500, seed=2)
        assert [r.constant_values["R"] for r in reports] == [0.5, 1.0, 5.0]
        for rep in reports:
            assert rep.passed, rep.details
            assert rep.details["violations"] == 0
            assert rep.details["max_observed_ratio"] <= rep.constant_values["L"]


class TestContinuity:
    def test_identical_traces(self, decay_trace, decay_cfg, plant):
        rep = continuity_check(decay_trace, decay_trace, plant, decay_cfg, 2.0)
        assert rep.passed
        assert rep.details["max_distance"] == 0.0

    def test_perturbed_initial_state(self, unit_cfg, plant):
        x0 = HistoryWindow.constant(1.0, 1.0, 50)
        rep = perturbed_pair(plant, unit_cfg, DisturbanceSpec(), x0, np.zeros(50), 0.0, 1e-6, 1.0)
        assert rep.passed
        assert rep.details["initial_distance"] >= 0.99e-6
        assert rep.details["max_distance"] < 1e-3

    def test_overflowing_gain_is_vacuous(self, unit_cfg, plant):
        x0 = HistoryWindow.constant(1.0, 1.0, 50)
        rep = perturbed_pair(plant, unit_cfg, DisturbanceSpec(), x0, np.zeros(50), 0.0, 1e-6, 1.0)
        assert rep.constant_values["Q"] == math.inf
        assert rep.details["vacuous"]
        assert "vacuous" in rep.details["note"]

    def test_finite_gain_is_not_vacuous(self, zero_trace, decay_cfg, plant):
        rep = continuity_check(zero_trace, zero_trace, plant, decay_cfg, 2.0)
        assert rep.constant_values["Q"] == pytest.approx(math.exp(12.0))
        assert "vacuous" not in rep.details

    def test_grid_mismatch(self, unit_cfg):
        plant = PlantParams(theta=1.0)
        a = run(plant, unit_cfg, DisturbanceSpec(), HistoryWindow.constant(1.0, 1.0, 10), np.zeros(10), 0.0, 1.0)
        b = run(plant, unit_cfg, DisturbanceSpec(), HistoryWindow.constant(1.0, 1.0, 20), np.zeros(20), 0.0, 1.0)
        with pytest.raises(GridMismatchError):
            continuity_check(a, b, plant, unit_cfg, 1.0)

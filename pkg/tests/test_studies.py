
import pytest

from app.errors import BlowUpError, GridError, InvalidConfigError, UnsweepableAxisError
from app.scenario import parse_config
from app.studies import (
    convergence_study,
    distance_orders,
    halved,
    observed_order,
    summarize,
    sweep,
    sweep_async,
    with_value,
)

DISTURBED = """
disturbance:
  kind: constant
  amplitude: 0.1
"""


@pytest.fixture
def base(small_scenario_text):
    return parse_config(small_scenario_text.replace("t_final: 3.0", "t_final: 2.0"), name="small")


@pytest.fixture
def disturbed(small_scenario_text):
    return parse_config(small_scenario_text.replace("t_final: 3.0", "t_final: 2.0") + DISTURBED, name="dist")


class TestWithValue:
    def test_sets_the_axis(self, base):
        cfg = with_value(base, "sigma", 0.5)
        assert cfg.controller.sigma == 0.5
        assert cfg.name == "small-sigma-0.5"
        assert base.controller.sigma == 0.05

    def test_unknown_axis(self, base):
        with pytest.raises(UnsweepableAxisError) as info:
            with_value(base, "r", 2.0)
        assert info.value.path == "r"

    def test_c_keeps_the_default_decay_rate_valid(self, base):
        cfg = with_value(base, "c", 0.2)
        assert cfg.controller.omega == pytest.approx(0.2)

    def test_amplitude_recomputes_sup(self, disturbed):
        assert with_value(disturbed, "amplitude", 0.3).disturbance.sup == pytest.approx(0.3)

    def test_step_off_grid(self, base):
        with pytest.raises(GridError):
            with_value(base, "h", 0.3)


@pytest.mark.anyio
async def test_sweep_sigma_bound_column(disturbed):
    rows = await sweep_async(disturbed, "sigma", [0.05, 0.5, 5.0], workers=2)
    assert [r.value for r in rows] == [0.05, 0.5, 5.0]
    assert [r.identifier_bound for r in rows] == pytest.approx([2.0, 0.2, 0.02])
    assert all(r.passed for r in rows)


@pytest.mark.anyio
async def test_single_value_sweep_matches_direct_run(base):
    (row,) = await sweep_async(base, "theta", [1.0])
    direct = summarize(with_value(base, "theta", 1.0), "theta", 1.0)
    assert row == direct


def test_sweep_c_state_gain(base):
    rows = sweep(base, "c", [0.5, 1.0, 2.0])
    assert [r.state_gain for r in rows] == pytest.approx([1.6818, 0.8409, 0.4204], abs=1e-4)
    assert rows[0].final_abs_x > rows[2].final_abs_x


class TestConvergence:
    def test_zero_scenario_is_exact(self, small_scenario_text):
        cfg = parse_config(small_scenario_text.replace("x0_value: 1.0", "x0_value: 0.0"), name="zero")
        rows = convergence_study(cfg, 2)
        assert [r.h for r in rows] == pytest.approx([0.01, 0.005, 0.0025])
        assert all(r.identity_residual == 0.0 for r in rows)
        assert observed_order(rows) is None
        assert rows[0].self_distance == 0.0 and rows[-1].self_distance is None

    def test_second_order_residual(self, small_scenario_text):
        rows = convergence_study(parse_config(small_scenario_text, name="small"), 2)
        assert rows[0].order is None
        assert observed_order(rows) >= 1.8
        assert all(o is not None and o > 0.5 for o in distance_orders(rows))

    def test_needs_two_halvings(self, base):
        with pytest.raises(InvalidConfigError):
            convergence_study(base, 1)


NOISY = """
disturbance:
  kind: uniform_noise
  amplitude: 0.1
  seed: 3
"""


@pytest.fixture
def noisy_text(small_scenario_text):
    return small_scenario_text + NOISY


class TestHalvedLevels:
    def test_noise_cell_pinned_to_base_step(self, noisy_text):
        cfg = parse_config(noisy_text, name="noisy")
        level = halved(cfg, 2)
        assert level.h == pytest.approx(0.0025)
        assert level.disturbance.cell == pytest.approx(0.01)
        assert cfg.disturbance.cell is None

    def test_explicit_cell_is_kept(self, noisy_text):
        cfg = parse_config(noisy_text.replace("  seed: 3", "  seed: 3\n  cell: 0.05"), name="noisy")
        assert halved(cfg, 1).disturbance.cell == pytest.approx(0.05)

    def test_noisy_levels_share_one_realization(self, noisy_text):
        rows = convergence_study(parse_config(noisy_text, name="noisy"), 2)
        assert all(o is not None and o >= 0.8 for o in distance_orders(rows))


def test_sweep_failure_is_raised_unwrapped(base):
    fragile = base.controller.model_copy(update={"blowup_limit": 1e-6})
    failing = base.model_copy(update={"controller": fragile})
    with pytest.raises(BlowUpError) as info:
        sweep(failing, "theta", [1.0, 2.0], workers=2)
    assert info.value.time == 0.0

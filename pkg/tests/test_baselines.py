import numpy as np
import pytest

from wptopt.baselines import (
    decoupling_transmit,
    eval_decoupling,
    eval_ideal_hpa,
    optimize_rectenna_only,
    scaled_matched_filter,
    sspa_transmit,
)
from wptopt.experiments import generate_channel
from wptopt.optimizer import DegenerateChannelError, PowerBudgets
from wptopt.rectenna import diode_coefficients, effective_weights, zdc
from wptopt.signal import TimeGrid, average_power, dbw_to_watts
from wptopt.sspa import SspaParams

from conftest import random_complex

P_TR = dbw_to_watts(-40.0)
DEFAULT_BUDGETS = PowerBudgets(dbw_to_watts(-20.0), P_TR)


def test_rectenna_only_single_tone(rect):
    h = 0.3 + 1.1j
    w = optimize_rectenna_only([[h]], P_TR, rect)
    assert abs(w[0, 0]) == pytest.approx(np.sqrt(2 * P_TR), rel=1e-6)
    assert np.angle(w[0, 0] * h) == pytest.approx(0.0, abs=1e-9)


def test_rectenna_only_two_antennas_is_mrt(rng, rect):
    h = random_complex(rng, (1, 2))
    w = optimize_rectenna_only(h, P_TR, rect)
    mrt = scaled_matched_filter(h, P_TR)
    np.testing.assert_allclose(w, mrt, rtol=1e-5, atol=1e-9 * np.abs(mrt).max())


def test_rectenna_only_spends_full_budget(rng, rect):
    w = optimize_rectenna_only(random_complex(rng, (8, 1)), P_TR, rect)
    assert average_power(w) == pytest.approx(P_TR, rel=1e-6)


def test_rectenna_only_beats_matched_filter(rect):
    for i in range(50):
        h = generate_channel(8, 1, 7, i)
        w = optimize_rectenna_only(h, P_TR, rect)
        assert eval_ideal_hpa(h, w, rect) >= eval_ideal_hpa(h, scaled_matched_filter(h, P_TR), rect)


def test_rectenna_only_degenerate(rect):
    with pytest.raises(DegenerateChannelError):
        optimize_rectenna_only(np.zeros((3, 1)), P_TR, rect)


def test_ideal_hpa_is_plain_zdc(rng, rect):
    h, w = random_complex(rng, (4, 2)), random_complex(rng, (4, 2), 0.01)
    assert eval_ideal_hpa(h, np.zeros((4, 2)), rect) == 0.0
    assert eval_ideal_hpa(h, w, rect) == zdc(effective_weights(h, w), diode_coefficients(rect), 50.0)


def test_matched_filter_examples(rng):
    w = scaled_matched_filter(np.ones((4, 1)), 0.5)
    np.testing.assert_allclose(np.abs(w), 0.5, rtol=1e-15)
    h = random_complex(rng, (6, 3))
    w = scaled_matched_filter(h, 0.37)
    assert average_power(w) == pytest.approx(0.37, rel=1e-12)
    np.testing.assert_allclose(np.angle(w), -np.angle(h), atol=1e-12)


def test_matched_filter_zero_channel():
    with pytest.raises(DegenerateChannelError):
        scaled_matched_filter(np.zeros((2, 1)), 1.0)


@pytest.mark.parametrize("scaling", ["none", "p_in"])
def test_decoupling_linear_limit_equals_ideal(rng, rect, scaling):
    h = random_complex(rng, (8, 1))
    w9 = optimize_rectenna_only(h, P_TR, rect)
    value = eval_decoupling(h, PowerBudgets(P_TR, P_TR), SspaParams(1.0, 1e6, 1.0), rect, w9=w9, input_scaling=scaling)
    assert value == pytest.approx(eval_ideal_hpa(h, w9, rect), rel=1e-6)


def test_decoupling_never_beats_ideal(rect, sspa_default):
    for i in range(10):
        h = generate_channel(8, 1, 3, i)
        for p_tr in (-45.0, -35.0):
            b = PowerBudgets(dbw_to_watts(-20.0), dbw_to_watts(p_tr))
            w9 = optimize_rectenna_only(h, b.p_tr_max, rect)
            dec = eval_decoupling(h, b, sspa_default, rect, w9=w9)
            assert dec <= eval_ideal_hpa(h, w9, rect) * (1 + 1e-9)


def test_decoupling_respects_both_budgets(rng, sspa_default):
    grid = TimeGrid(128)
    for scaling in ("none", "p_in"):
        for p_tr in (-45.0, -30.0):
            b = PowerBudgets(dbw_to_watts(-20.0), dbw_to_watts(p_tr))
            w9 = scaled_matched_filter(random_complex(rng, (8, 1)), b.p_tr_max)
            w_in, w_tr = decoupling_transmit(w9, b, sspa_default, grid, scaling)
            assert average_power(w_in) <= b.p_in_max * (1 + 1e-12)
            assert average_power(w_tr) <= b.p_tr_max
            np.testing.assert_allclose(w_tr, sspa_transmit(w_in, sspa_default, grid))


def test_decoupling_input_scaling_modes(rng, sspa_default):
    grid = TimeGrid(128)
    w9 = scaled_matched_filter(random_complex(rng, (8, 1)), dbw_to_watts(-50.0))
    w_in, _ = decoupling_transmit(w9, PowerBudgets(dbw_to_watts(-20.0), 1.0), sspa_default, grid, "none")
    np.testing.assert_array_equal(w_in, w9)
    w_in, _ = decoupling_transmit(w9, PowerBudgets(dbw_to_watts(-20.0), 1.0), sspa_default, grid, "p_in")
    assert average_power(w_in) == pytest.approx(dbw_to_watts(-20.0), rel=1e-12)
    with pytest.raises(ValueError):
        decoupling_transmit(w9, DEFAULT_BUDGETS, sspa_default, grid, "peak")


def test_decoupling_converges_to_ideal_for_hard_knee(rng, rect):
    h = random_complex(rng, (4, 1))
    w9 = optimize_rectenna_only(h, dbw_to_watts(-50.0), rect)
    ideal = eval_ideal_hpa(h, w9, rect)
    b = PowerBudgets(dbw_to_watts(-20.0), dbw_to_watts(-50.0))
    gaps = [ideal - eval_decoupling(h, b, SspaParams(1.0, 0.1, beta), rect, w9=w9) for beta in (1.0, 4.0, 32.0)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert abs(gaps[2]) <= 1e-9 * ideal

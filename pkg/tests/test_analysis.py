"""Churn analytics against their Monte-Carlo twins and frozen values.

The sampled twins mirror the closed forms' event structure, so the two
must agree to statistical error; reference values below were computed
with an independent enumeration before this module existed.
"""

from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pvssbft.analysis import (
    ChurnParams,
    DegenerateInputError,
    expected_actives,
    max_tolerable_p,
    mc_phase_expectation,
    mc_steady_state,
    mc_success_probabilities,
    round_offline_tolerance,
    steady_state_ex1,
    success_probabilities,
    success_probabilities_normal,
)

# frozen by an independent enumeration (multinomial over per-node first
# sleep times), not by running this module
STEADY_P021_N40 = 11.477798437641678
STEADY_P005_N40 = 12.976933889439355
VOTE_P015_N40 = 0.9485070576
CONFIRM_P015_N40 = 0.9479041436
P_GRID = (0.05, 0.1, 0.15, 0.2, 0.3)
N_GRID = (20, 40, 80)


def quantities(pe):
    return pe.ex_phase[1:] + pe.sleepy + (pe.newly_active,)


def test_zero_churn_keeps_everyone():
    pe = expected_actives(ChurnParams(40, 0.0), 25)
    assert pe.ex_phase == (25, 25, 25, 25)
    assert pe.sleepy == (0.0, 0.0)
    assert pe.newly_active == 0.0


def test_total_churn_empties_later_phases():
    pe = expected_actives(ChurnParams(40, 1.0), 25)
    assert pe.ex_phase == (25, 0.0, 0.0, 0.0)
    assert pe.sleepy == (25.0, 25.0)
    assert pe.newly_active == 0.0


def test_phase_expectation_values():
    pe = expected_actives(ChurnParams(40, 0.1), 30)
    assert pe.ex_phase == pytest.approx((30, 24.3, 21.87, 19.683), abs=1e-9)
    assert pe.sleepy == pytest.approx((3.0, 5.7), abs=1e-9)
    assert pe.newly_active == pytest.approx(1.782, abs=1e-9)


def test_phase_expectation_matches_sampler_closely():
    params = ChurnParams(40, 0.1)
    mean, _ = mc_phase_expectation(params, 30, trials=100_000, seed=11)
    closed = expected_actives(params, 30)
    for got, want in zip(quantities(mean), quantities(closed)):
        assert abs(got - want) <= 0.5


@pytest.mark.parametrize("n", N_GRID)
@pytest.mark.parametrize("p", P_GRID)
def test_closed_forms_within_three_sigma_of_sampler(p, n):
    params = ChurnParams(n, p)
    ex1 = 3 * n // 4
    mean, err = mc_phase_expectation(params, ex1, trials=100_000,
                                     seed=7000 + 1000 * n + int(p * 100))
    closed = expected_actives(params, float(ex1))
    for got, se, want in zip(quantities(mean), quantities(err),
                             quantities(closed)):
        assert abs(got - want) <= max(3.0 * se, 1e-9)


@given(st.floats(0.0, 1.0), st.floats(0.0, 40.0))
def test_phase_expectation_invariants(p, ex1):
    pe = expected_actives(ChurnParams(40, p), ex1)
    phases = pe.ex_phase
    assert all(phases[i] >= phases[i + 1] - 1e-12 for i in range(3))
    for value in phases + pe.sleepy + (pe.newly_active,):
        assert -1e-12 <= value <= 40 + 1e-9


def test_steady_state_fixed_point_value():
    assert steady_state_ex1(ChurnParams(40, 0.21)) == \
        pytest.approx(STEADY_P021_N40, abs=1e-9)
    assert steady_state_ex1(ChurnParams(40, 0.05)) == \
        pytest.approx(STEADY_P005_N40, abs=1e-9)


def test_steady_state_is_a_fixed_point_and_start_independent():
    params = ChurnParams(40, 0.21)
    ref = steady_state_ex1(params)
    for start in (0.5, 7.0, 25.0, 40.0):
        assert steady_state_ex1(params, start=start) == \
            pytest.approx(ref, abs=1e-8)
    pe = expected_actives(params, ref)
    assert ref == pytest.approx(ref * (1 - 0.21) ** 4 + pe.newly_active,
                                abs=1e-9)


def test_steady_state_small_p_limit_is_a_third():
    # wake-ups and leaks are both O(p), so the recursion settles at n/3
    # instead of recovering full participation as p vanishes
    assert steady_state_ex1(ChurnParams(40, 1e-9)) == \
        pytest.approx(40 / 3, abs=1e-3)


def test_steady_state_matches_long_run_sampler():
    got = mc_steady_state(ChurnParams(40, 0.21), rounds=100_000, seed=21)
    assert abs(got - STEADY_P021_N40) <= 1.0


def test_steady_state_degenerate_inputs():
    with pytest.raises(DegenerateInputError):
        steady_state_ex1(ChurnParams(40, 0.0))
    with pytest.raises(DegenerateInputError):
        steady_state_ex1(ChurnParams(40, 1.0))


def test_success_probabilities_values():
    vote, confirm = success_probabilities(ChurnParams(40, 0.15))
    assert vote == pytest.approx(VOTE_P015_N40, abs=1e-9)
    assert confirm == pytest.approx(CONFIRM_P015_N40, abs=1e-9)
    assert success_probabilities(ChurnParams(40, 0.0)) == (1.0, 1.0)
    heavy_vote, _ = success_probabilities(ChurnParams(40, 0.5))
    assert heavy_vote < 0.05


def test_success_probabilities_match_sampler():
    vote, confirm = mc_success_probabilities(ChurnParams(40, 0.15),
                                             trials=10_000, seed=15)
    assert abs(vote - VOTE_P015_N40) <= 0.03
    assert abs(confirm - CONFIRM_P015_N40) <= 0.03


@pytest.mark.parametrize("n", N_GRID)
def test_success_probabilities_monotone_in_p(n):
    probs = [success_probabilities(ChurnParams(n, p))
             for p in (0.0,) + P_GRID]
    votes = [v for v, _ in probs]
    confirms = [c for _, c in probs]
    assert votes == sorted(votes, reverse=True)
    assert confirms == sorted(confirms, reverse=True)


def test_normal_approximation_tracks_exact_vote():
    for p in (0.0,) + P_GRID:
        params = ChurnParams(40, p)
        exact_vote, exact_confirm = success_probabilities(params)
        approx_vote, approx_confirm = success_probabilities_normal(params)
        assert abs(approx_vote - exact_vote) < 0.05
        assert 0.0 <= approx_confirm <= 1.0


def test_max_tolerable_p_value():
    p = max_tolerable_p()
    assert abs(p - 0.2062994740) <= 1e-9
    assert abs((1 - p) ** 3 - 0.5) <= 1e-9
    # at that p the confirm-phase margin still holds: survivors of four
    # seconds exceed half the not-yet-detected actives
    q = 1 - p
    assert q ** 4 >= q ** 2 / 2


def test_round_offline_tolerance_values():
    assert round_offline_tolerance(0.0) == 0.0
    assert round_offline_tolerance(0.21) == pytest.approx(0.61049919, abs=1e-9)
    assert round_offline_tolerance(max_tolerable_p()) == \
        pytest.approx(1 - 2 ** (-4 / 3), abs=1e-12)
    with pytest.raises(DegenerateInputError):
        round_offline_tolerance(1.2)


def test_parameter_validation():
    with pytest.raises(DegenerateInputError):
        ChurnParams(0, 0.1)
    with pytest.raises(DegenerateInputError):
        ChurnParams(10, -0.01)
    with pytest.raises(DegenerateInputError):
        ChurnParams(10, 1.01)
    with pytest.raises(DegenerateInputError):
        expected_actives(ChurnParams(10, 0.1), 11)


def test_samplers_are_deterministic_per_seed():
    a = mc_success_probabilities(ChurnParams(20, 0.2), trials=2_000, seed=4)
    b = mc_success_probabilities(ChurnParams(20, 0.2), trials=2_000, seed=4)
    assert a == b

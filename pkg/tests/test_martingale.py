"""Unit tests for per-observation updates and the decision rule."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from betmart.config import ConstantStake, Side, TestConfig, validate_stake
from betmart.errors import ConfigError, InvalidStake, ObservationOutOfBounds, StreamDesync
from betmart.martingale import (
    Branch,
    Decision,
    MartingaleState,
    batch_step,
    decision,
    factor,
    step,
    two_sided_value,
)

AUDIT = TestConfig(mu=0.05, alpha=0.05, tau0=0.0, tau1=1.0)


# -- config invariants ------------------------------------------------------


def test_config_requires_tau1_for_upper_null():
    with pytest.raises(ConfigError):
        TestConfig(mu=0.05, alpha=0.05, tau0=0.0, side=Side.UPPER_NULL)


def test_config_requires_mu_below_tau1():
    with pytest.raises(ConfigError):
        TestConfig(mu=1.0, alpha=0.05, tau1=1.0)


def test_config_requires_mu_above_tau0_for_lower_null():
    with pytest.raises(ConfigError):
        TestConfig(mu=0.0, alpha=0.05, tau0=0.0, side=Side.LOWER_NULL)


def test_two_sided_needs_both_bounds_and_rho():
    with pytest.raises(ConfigError):
        TestConfig(mu=0.5, alpha=0.05, tau1=1.0, side=Side.TWO_SIDED, rho_plus=0.5)
    cfg = TestConfig(mu=0.5, alpha=0.05, tau0=0.0, tau1=1.0, side=Side.TWO_SIDED, rho_plus=0.3)
    assert cfg.rho_minus == pytest.approx(0.7)


def test_alpha_range():
    for alpha in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ConfigError):
            TestConfig(mu=0.05, alpha=alpha, tau1=1.0)


# -- factor -----------------------------------------------------------------


def test_factor_at_null_mean_is_one():
    for c in (0.0, 0.3, 1.0):
        assert factor(Branch.UPPER, 0.05, AUDIT, c) == 1.0


def test_factor_full_stake_at_upper_bound_is_zero():
    assert factor(Branch.UPPER, 1.0, AUDIT, 1.0) == 0.0


def test_factor_direct_substitution():
    # 1 + 0.6 * 0.05 / 0.95
    assert factor(Branch.UPPER, 0.0, AUDIT, 0.6) == pytest.approx(1.031578947368421, abs=1e-15)


def test_factor_lower_branch():
    cfg = TestConfig(mu=0.5, alpha=0.05, tau0=0.0, side=Side.LOWER_NULL)
    assert factor(Branch.LOWER, 0.5, cfg, 0.7) == 1.0
    assert factor(Branch.LOWER, 0.0, cfg, 1.0) == 0.0
    assert factor(Branch.LOWER, 0.75, cfg, 0.4) == pytest.approx(1.2)


def test_factor_rejects_out_of_bounds_observation():
    with pytest.raises(ObservationOutOfBounds):
        factor(Branch.UPPER, 1.5, AUDIT, 0.5)
    with pytest.raises(ObservationOutOfBounds):
        factor(Branch.UPPER, -0.1, AUDIT, 0.5)


def test_factor_rejects_bad_stake():
    for c in (-0.01, 1.01, math.nan):
        with pytest.raises(InvalidStake):
            factor(Branch.UPPER, 0.0, AUDIT, c)


def test_out_of_bounds_error_carries_index():
    with pytest.raises(ObservationOutOfBounds) as err:
        from betmart.config import as_observations

        as_observations([0.0, 0.2, 7.0], AUDIT)
    assert err.value.index == 2
    assert "7.0" in str(err.value)


@given(
    t=st.floats(min_value=0.0, max_value=1.0),
    c=st.floats(min_value=0.0, max_value=1.0),
)
def test_factor_positivity_and_floor(t, c):
    f = factor(Branch.UPPER, t, AUDIT, c)
    assert f >= 0.0
    assert f >= (1.0 - c) - 1e-15


# -- step / batch_step ------------------------------------------------------


def test_step_single_zero_full_stake():
    state = step(MartingaleState(), 0.0, 1.0, AUDIT)
    assert state.k == 1
    assert state.log_m == pytest.approx(math.log(1.0 / 0.95), abs=1e-15)
    assert state.log_m_max == state.log_m
    assert not state.absorbed


def test_step_first_rejection_at_59_for_all_zero_stream():
    # independent oracle: multiply 1/0.95 up until reaching 1/alpha
    m, oracle_k = 1.0, 0
    while m < 1 / 0.05:
        m *= 1 / 0.95
        oracle_k += 1
    assert oracle_k == 59

    state = MartingaleState()
    first = None
    for k in range(1, 80):
        state = step(state, 0.0, 1.0, AUDIT)
        if first is None and decision(state, 0.05) is Decision.REJECT:
            first = k
    assert first == oracle_k == 59


def test_step_absorption_is_sticky():
    state = step(MartingaleState(), 1.0, 1.0, AUDIT)
    assert state.absorbed and state.log_m == -math.inf
    after = step(state, 0.0, 1.0, AUDIT)
    assert after.k == 2 and after.absorbed and after.log_m == -math.inf
    assert after.log_m_max == state.log_m_max


def test_batch_empty_is_identity():
    state = MartingaleState(k=3, log_m=0.5, log_m_max=0.7)
    assert batch_step(state, [], 0.4, AUDIT) == state


def test_batch_two_zeros():
    state = batch_step(MartingaleState(), [0.0, 0.0], 1.0, AUDIT)
    assert state.log_m == pytest.approx(2 * math.log(1 / 0.95), abs=1e-14)


def test_batch_zero_factor_annihilates():
    state = batch_step(MartingaleState(), [0.0, 1.0, 0.0], 1.0, AUDIT)
    assert state.absorbed and state.log_m == -math.inf
    assert state.log_m_max == 0.0


def test_batch_matches_sequential_fold_but_not_max():
    rng = np.random.default_rng(7)
    ts = rng.beta(0.4, 6.0, size=200)
    c = 0.8
    seq = MartingaleState()
    for t in ts:
        seq = step(seq, t, c, AUDIT)
    bat = batch_step(MartingaleState(), ts, c, AUDIT)
    assert bat.log_m == pytest.approx(seq.log_m, abs=1e-9)
    assert bat.k == seq.k
    assert bat.log_m_max <= seq.log_m_max + 1e-12


def test_batch_misses_intermediate_crossing():
    # spike crosses mid-batch, then falls back below the threshold
    spike = [0.0] * 66 + [1.0] * 2
    seq = MartingaleState()
    for t in spike:
        seq = step(seq, t, 0.9, AUDIT)
    bat = batch_step(MartingaleState(), spike, 0.9, AUDIT)
    assert decision(seq, 0.05) is Decision.REJECT
    assert decision(bat, 0.05) is Decision.CONTINUE


# -- two-sided combination --------------------------------------------------


def test_two_sided_weight_one_returns_plus():
    plus = MartingaleState(k=4, log_m=1.3, log_m_max=1.3)
    minus = MartingaleState(k=4, log_m=-0.2, log_m_max=0.0)
    assert two_sided_value(plus, minus, 1.0) == pytest.approx(1.3)


def test_two_sided_equal_weights_of_unit_values():
    plus = MartingaleState(k=2)
    minus = MartingaleState(k=2)
    assert two_sided_value(plus, minus, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_two_sided_one_branch_absorbed():
    plus = MartingaleState(k=5, log_m=-math.inf, absorbed=True)
    minus = MartingaleState(k=5, log_m=math.log(4.0), log_m_max=math.log(4.0))
    assert two_sided_value(plus, minus, 0.5) == pytest.approx(math.log(2.0), abs=1e-15)


def test_two_sided_desync_rejected():
    with pytest.raises(StreamDesync):
        two_sided_value(MartingaleState(k=3), MartingaleState(k=4), 0.5)


# -- decision ---------------------------------------------------------------


def test_decision_boundary_inclusive():
    assert decision(-math.log(0.05), 0.05) is Decision.REJECT


def test_decision_at_start_continues():
    assert decision(0.0, 0.05) is Decision.CONTINUE
    assert decision(MartingaleState(), 0.05) is Decision.CONTINUE


# -- martingale identities --------------------------------------------------


def test_martingale_identity_on_null_grid():
    # Alt(mu) at the null: nu(1-c) + (1-nu)(1 + c mu/(1-mu)) == 1 exactly
    for mu in np.linspace(0.01, 0.9, 23):
        cfg = TestConfig(mu=mu, alpha=0.05, tau0=0.0, tau1=1.0)
        for c in np.linspace(0.0, 1.0, 21):
            total = mu * factor(Branch.UPPER, 1.0, cfg, c) + (1 - mu) * factor(
                Branch.UPPER, 0.0, cfg, c
            )
            assert abs(total - 1.0) <= 1e-12


def test_null_supermartingale_for_random_finite_support():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n_pts = rng.integers(2, 6)
        pts = np.sort(rng.random(n_pts))
        w = rng.random(n_pts) + 0.05
        w /= w.sum()
        mean = float(pts @ w)
        mu = mean * rng.uniform(0.2, 1.0)  # null holds: E(T) >= mu
        if mu <= 0 or mu >= 1:
            continue
        cfg = TestConfig(mu=mu, alpha=0.05, tau1=1.0)
        c = rng.random()
        total = sum(p * factor(Branch.UPPER, t, cfg, c) for t, p in zip(pts, w))
        assert total <= 1.0 + 1e-12


def test_absorption_permanence_decision_only_from_prior_max():
    # run up past the threshold, then absorb: decision must stay Reject
    state = MartingaleState()
    for _ in range(59):
        state = step(state, 0.0, 1.0, AUDIT)
    assert decision(state, 0.05) is Decision.REJECT
    state = step(state, 1.0, 1.0, AUDIT)
    assert state.absorbed
    assert decision(state, 0.05) is Decision.REJECT
    # but absorbing before the crossing leaves Continue forever
    low = step(MartingaleState(), 1.0, 1.0, AUDIT)
    for _ in range(100):
        low = step(low, 0.0, 1.0, AUDIT)
    assert decision(low, 0.05) is Decision.CONTINUE


def test_state_json_round_trip():
    state = MartingaleState(k=3, log_m=-math.inf, log_m_max=0.42, absorbed=True)
    obj = state.to_json()
    assert obj["log_m"] == "-inf"
    assert MartingaleState.from_json(obj) == state


def test_validate_stake_bounds():
    assert validate_stake(0.0) == 0.0
    assert validate_stake(1.0) == 1.0
    with pytest.raises(InvalidStake):
        validate_stake(1.0000001)

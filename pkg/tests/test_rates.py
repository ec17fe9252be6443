"""Rate functionals: hand-computed values, corner identities, bound ordering."""

import math

import numpy as np
import pytest

import marcopt as m
from marcopt.rates import (
    SUM_RATE_TERM_NAMES,
    achievable_sum_rate,
    corner_rates,
    rate_at_destination,
    rate_at_relay,
    relay_bonus,
    sum_rate_terms,
)

from fixtures import GEO_MAIN, config, ensemble


def _one_state(g_r1=2.0, g_r2=1.0, g_d1=0.5, g_d2=0.25, g_dr=4.0):
    return m.FadingEnsemble([m.GainState(g_r1, g_r2, g_d1, g_d2, g_dr)], [1.0])


def test_channel_config_validation():
    with pytest.raises(ValueError, match="theta"):
        m.ChannelConfig(0.0, 1, 1, 1)
    with pytest.raises(ValueError, match="theta"):
        m.ChannelConfig(1.0, 1, 1, 1)
    with pytest.raises(ValueError, match="p1_bar"):
        m.ChannelConfig(0.5, -1, 1, 1)
    with pytest.raises(ValueError, match="pr_bar"):
        m.ChannelConfig(0.5, 1, 1, math.nan)
    cfg = m.ChannelConfig(0.5, 1, 2, 3)
    assert (cfg.budget("1"), cfg.budget("2"), cfg.budget("r")) == (1, 2, 3)


def test_power_policy_validation():
    with pytest.raises(ValueError, match="length"):
        m.PowerPolicy([1.0], [1.0, 2.0], [1.0])
    with pytest.raises(ValueError, match="one-dimensional"):
        m.PowerPolicy(np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2)))
    zero = m.PowerPolicy.zeros(3)
    assert len(zero) == 3 and zero.p2.sum() == 0.0


def test_single_state_rates_match_hand_formulas():
    e = _one_state()
    theta = 0.5
    policy = m.PowerPolicy([1.0], [2.0], [0.75])
    bonus = (1 - theta) * math.log2(1 + 4.0 * 0.75 / (1 - theta))
    assert relay_bonus(policy, e, theta) == pytest.approx(bonus, rel=1e-14)
    assert rate_at_relay((1,), policy, e, theta) == pytest.approx(
        theta * math.log2(1 + 2.0 * 1.0 / theta), rel=1e-14
    )
    assert rate_at_relay((1, 2), policy, e, theta) == pytest.approx(
        theta * math.log2(1 + (2.0 * 1.0 + 1.0 * 2.0) / theta), rel=1e-14
    )
    # every destination-side bound carries the relay bonus
    assert rate_at_destination((2,), policy, e, theta) == pytest.approx(
        theta * math.log2(1 + 0.25 * 2.0 / theta) + bonus, rel=1e-14
    )


def test_zero_policy_has_zero_rates():
    e = _one_state()
    policy = m.PowerPolicy.zeros(1)
    cfg = config(1.0)
    assert achievable_sum_rate(policy, e, cfg) == 0.0
    s = corner_rates(policy, e, cfg)
    assert s.sum_relay == 0.0 and s.sum_dest == 0.0


def test_user_set_and_alignment_errors():
    e = _one_state()
    policy = m.PowerPolicy([1.0], [1.0], [1.0])
    with pytest.raises(ValueError, match="users"):
        rate_at_relay((), policy, e, 0.5)
    with pytest.raises(ValueError, match="users"):
        rate_at_relay((3,), policy, e, 0.5)
    with pytest.raises(ValueError, match="mismatch"):
        rate_at_relay((1,), m.PowerPolicy.zeros(2), e, 0.5)


def _random_policy(rng, n):
    return m.PowerPolicy(rng.uniform(0, 3, n), rng.uniform(0, 3, n), rng.uniform(0, 3, n))


def test_corner_rate_identities():
    """rmin_k = sum - rmax_j at each receiver, and the cross identity:

    (dest sum) - (relay sum) equals both
    (rmin_dest_2 - rmax_relay_2) - (rmin_relay_1 - rmax_dest_1) and
    (rmin_dest_1 - rmax_relay_1) - (rmin_relay_2 - rmax_dest_2),
    because each bracketed difference telescopes to the same two sums.
    """
    e = ensemble(GEO_MAIN)
    cfg = config(2.0)
    rng = np.random.default_rng(11)
    for _ in range(5):
        s = corner_rates(_random_policy(rng, e.n_states), e, cfg)
        assert s.rmin_relay[0] == pytest.approx(s.sum_relay - s.rmax_relay[1], abs=1e-12)
        assert s.rmin_dest[1] == pytest.approx(s.sum_dest - s.rmax_dest[0], abs=1e-12)
        d = s.sum_dest - s.sum_relay
        a1 = s.rmin_relay[0] - s.rmax_dest[0]
        a2 = s.rmin_dest[1] - s.rmax_relay[1]
        b1 = s.rmin_dest[0] - s.rmax_relay[0]
        b2 = s.rmin_relay[1] - s.rmax_dest[1]
        assert d == pytest.approx(a2 - a1, abs=1e-10)
        assert d == pytest.approx(b1 - b2, abs=1e-10)
        assert s.rmax(1, "relay") == s.rmax_relay[0]
        assert s.rmin(2, "dest") == s.rmin_dest[1]


def test_sum_rate_is_min_of_the_four_bounds():
    e = ensemble(GEO_MAIN)
    cfg = config(2.0)
    rng = np.random.default_rng(12)
    policy = _random_policy(rng, e.n_states)
    s = corner_rates(policy, e, cfg)
    terms = sum_rate_terms(s)
    assert len(terms) == len(SUM_RATE_TERM_NAMES) == 4
    assert terms[0] == s.sum_relay and terms[1] == s.sum_dest
    assert terms[2] == pytest.approx(s.rmax_relay[0] + s.rmax_dest[1])
    assert terms[3] == pytest.approx(s.rmax_dest[0] + s.rmax_relay[1])
    assert achievable_sum_rate(policy, e, cfg) == min(terms)


def test_budget_residuals_and_feasibility():
    e = _one_state()
    cfg = m.ChannelConfig(0.5, 1.0, 2.0, 3.0)
    policy = m.PowerPolicy([1.0], [2.0], [3.0])
    assert policy.budget_residuals(e, cfg) == (0.0, 0.0, 0.0)
    assert policy.is_feasible(e, cfg)
    assert not m.PowerPolicy([1.1], [2.0], [3.0]).is_feasible(e, cfg)
    assert not m.PowerPolicy([-0.1], [0.0], [0.0]).is_feasible(e, cfg)

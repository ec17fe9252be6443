"""Independent ascent oracle: projection, objective, gradients, convergence."""

import numpy as np
import pytest

import marcopt as m
from marcopt.oracle import project_budgets, subgradient_solve, sum_rate_objective

from fixtures import GEO_MAIN, config, ensemble


def test_projection_produces_feasible_policies():
    e = ensemble(GEO_MAIN)
    cfg = config(1.5, p1_bar=0.9, p2_bar=2.0)
    rng = np.random.default_rng(3)
    raw = [rng.uniform(-1, 4, e.n_states) for _ in range(3)]
    policy = project_budgets(*raw, e, cfg)
    assert policy.is_feasible(e, cfg)


def test_projection_is_idempotent_on_feasible_points():
    e = ensemble(GEO_MAIN)
    cfg = config(1.5)
    p = np.full(e.n_states, 0.5)
    policy = project_budgets(p, p, p, e, cfg)
    np.testing.assert_allclose(policy.p1, 0.5, atol=1e-12)
    np.testing.assert_allclose(policy.pr, 0.5, atol=1e-12)


def test_objective_value_matches_rate_functionals():
    e = ensemble(GEO_MAIN)
    cfg = config(1.5)
    rng = np.random.default_rng(4)
    policy = m.PowerPolicy(
        rng.uniform(0, 2, e.n_states),
        rng.uniform(0, 2, e.n_states),
        rng.uniform(0, 2, e.n_states),
    )
    ev = sum_rate_objective(policy, e, cfg)
    assert ev.value == pytest.approx(m.achievable_sum_rate(policy, e, cfg), abs=1e-12)
    assert ev.active_term_name in (
        "relay sum",
        "dest sum",
        "corner 1r+2d",
        "corner 1d+2r",
    )


def test_supergradient_matches_finite_differences():
    e = ensemble(GEO_MAIN)
    cfg = config(1.5)
    rng = np.random.default_rng(9)
    policy = m.PowerPolicy(
        rng.uniform(0.2, 1.5, e.n_states),
        rng.uniform(0.2, 1.5, e.n_states),
        rng.uniform(0.2, 1.5, e.n_states),
    )
    ev = sum_rate_objective(policy, e, cfg)
    h = 1e-6
    for grad, vec in ((ev.grad_p1, policy.p1), (ev.grad_pr, policy.pr)):
        for i in (0, e.n_states - 1):
            up = vec.copy()
            up[i] += h
            dn = vec.copy()
            dn[i] -= h
            if vec is policy.p1:
                vu = sum_rate_objective(m.PowerPolicy(up, policy.p2, policy.pr), e, cfg)
                vd = sum_rate_objective(m.PowerPolicy(dn, policy.p2, policy.pr), e, cfg)
            else:
                vu = sum_rate_objective(m.PowerPolicy(policy.p1, policy.p2, up), e, cfg)
                vd = sum_rate_objective(m.PowerPolicy(policy.p1, policy.p2, dn), e, cfg)
            fd = (vu.value - vd.value) / (2 * h)
            assert grad[i] == pytest.approx(fd, abs=1e-5)


def test_oracle_requires_positive_iterations():
    e = ensemble(GEO_MAIN)
    with pytest.raises(ValueError):
        subgradient_solve(e, config(1.0), iterations=0)


def test_oracle_zero_budgets_returns_zero_policy():
    e = ensemble(GEO_MAIN)
    report = subgradient_solve(
        e, m.ChannelConfig(0.5, 0.0, 0.0, 0.0), iterations=10
    )
    assert report.objective == 0.0
    assert report.policy.p1.sum() == 0.0


def test_oracle_is_deterministic():
    e = ensemble(GEO_MAIN)
    cfg = config(2.5)
    a = subgradient_solve(e, cfg, iterations=2000)
    b = subgradient_solve(e, cfg, iterations=2000)
    assert a.objective == b.objective
    np.testing.assert_array_equal(a.policy.p1, b.policy.p1)


def test_oracle_approaches_the_case_solution():
    e = ensemble(GEO_MAIN)
    cfg = config(2.5)
    out = m.classify_and_solve(e, cfg)
    report = subgradient_solve(e, cfg, iterations=20_000)
    assert report.policy.is_feasible(e, cfg)
    assert abs(out.sum_rate - report.objective) <= 1e-3
    # more iterations move the oracle closer, never past, the optimum
    longer = subgradient_solve(e, cfg, iterations=60_000)
    assert longer.objective >= report.objective - 1e-12
    assert longer.objective <= out.sum_rate + 1e-9

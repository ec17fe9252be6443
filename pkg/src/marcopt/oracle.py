"""Independent brute-force maximizer of the intersection sum-rate.

Projected supergradient ascent on the minimum of the four concave
sum-rate bounds; used to cross-validate every case solver and the
classifier.  Deliberately shares no code path with the case solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ensemble import FadingEnsemble
from .rates import LN2, ChannelConfig, PowerPolicy, SUM_RATE_TERM_NAMES

DEFAULT_ITERATIONS = 20_000

#: two term values closer than this count as tied; lowest index wins
TERM_TIE_TOL = 1e-12


@dataclass(frozen=True)
class ObjectiveEval:
    """Objective value, active (minimizing) bound, and a supergradient."""

    value: float
    active_term: int
    grad_p1: np.ndarray
    grad_p2: np.ndarray
    grad_pr: np.ndarray

    @property
    def active_term_name(self) -> str:
        return SUM_RATE_TERM_NAMES[self.active_term]


@dataclass(frozen=True)
class OracleReport:
    policy: PowerPolicy
    objective: float
    iterations: int
    final_step: float
    budget_residuals: tuple[float, float, float]


def sum_rate_objective(
    policy: PowerPolicy, e: FadingEnsemble, config: ChannelConfig
) -> ObjectiveEval:
    """min of the four sum-rate bounds plus a supergradient of the active one.

    Ties between bounds (within 1e-12) resolve to the lowest term index;
    the gradient of any active bound is a valid supergradient of the min.
    """
    terms = _kernels._objective_terms(
        e.g_r1, e.g_r2, e.g_d1, e.g_d2, e.g_dr,
        e.weights, config.theta, policy.p1, policy.p2, policy.pr,
    )
    value = terms[0]
    active = 0
    for k in range(1, 4):
        if terms[k] < value - TERM_TIE_TOL:
            value = terms[k]
            active = k
    value = min(terms)
    g1, g2, gr = _kernels._active_gradient(
        e.g_r1, e.g_r2, e.g_d1, e.g_d2, e.g_dr,
        e.weights, config.theta, policy.p1, policy.p2, policy.pr, active,
    )
    return ObjectiveEval(value, active, g1, g2, gr)


def project_budgets(
    raw_p1, raw_p2, raw_pr, e: FadingEnsemble, config: ChannelConfig
) -> PowerPolicy:
    """Euclidean projection, per transmitter, onto {p >= 0, E[p] <= budget}."""
    out = []
    for raw, budget in (
        (raw_p1, config.p1_bar),
        (raw_p2, config.p2_bar),
        (raw_pr, config.pr_bar),
    ):
        p = np.array(raw, dtype=np.float64)
        _kernels._project_budget(p, e.weights, budget)
        out.append(p)
    return PowerPolicy(*out)


def subgradient_solve(
    e: FadingEnsemble,
    config: ChannelConfig,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
) -> OracleReport:
    """Projected supergradient ascent from the uniform feasible start.

    Steps a/sqrt(t) with a = max budget, every iterate projected back to
    the feasible set, best iterate kept.  ``seed`` only matters for
    optional random restarts and is unused in the single-run default, so
    results are deterministic.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    del seed
    a = max(config.p1_bar, config.p2_bar, config.pr_bar)
    if a <= 0.0:
        policy = PowerPolicy.zeros(e.n_states)
        return OracleReport(policy, 0.0, iterations, 0.0, (0.0, 0.0, 0.0))
    p1, p2, pr, best, step = _kernels.subgradient_ascent(
        e.g_r1, e.g_r2, e.g_d1, e.g_d2, e.g_dr,
        e.weights, config.theta,
        config.p1_bar, config.p2_bar, config.pr_bar,
        iterations, a,
    )
    policy = PowerPolicy(p1, p2, pr)
    residuals = policy.budget_residuals(e, config)
    return OracleReport(policy, float(best), iterations, float(step), residuals)

"""Shared test fixtures: geometries, frozen label fixtures, random recipes.

The six boundary-label fixtures were found by bisecting the membership
slacks of the neighboring open-case policy along straight-line
interpolations of the gain matrices between two open-case ensembles
(``t`` is the interpolation weight).  The two fixtures whose membership
set imposes two equalities additionally bisect the relay budget so both
slacks vanish simultaneously.  The interpolation weights and budgets are
frozen so the classification is reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np

import marcopt as m
from marcopt.rates import LN2
from marcopt.solvers import (
    DEST,
    RELAY,
    FractionTerm,
    WeightedKKTSpec,
    boundary_spec,
    equalizer_spec,
    kkt_fractions,
    opportunistic_spec,
)

N_STATES = 16
SEED = 7
THETA = 0.5

# sources clustered near the relay, destination off to the side
GEO_MAIN = m.NodeGeometry((0.45, 0.2), (0.55, 0.22), (0.5, 0.0), (1.2, 0.0), 3.0)
# source 1 near the destination-side cluster, source 2 near the relay
GEO_C1 = m.NodeGeometry((0.5, 0.05), (1.45, 0.05), (0.5, 0.0), (1.5, 0.0), 3.0)
# mirror image of GEO_C1 under a user swap
GEO_C2 = m.NodeGeometry((1.45, 0.05), (0.5, 0.05), (0.5, 0.0), (1.5, 0.0), 3.0)


def ensemble(geo: m.NodeGeometry) -> m.FadingEnsemble:
    return m.build_geometry_ensemble(geo, N_STATES, seed=SEED)


def lerp(e_a: m.FadingEnsemble, e_b: m.FadingEnsemble, t: float) -> m.FadingEnsemble:
    """Straight-line interpolation of the gain matrices at weight ``t``."""
    return m.FadingEnsemble.from_arrays(
        (1.0 - t) * e_a.gains + t * e_b.gains, e_a.weights
    )


def config(pr_bar, theta=THETA, p1_bar=1.0, p2_bar=1.0) -> m.ChannelConfig:
    return m.ChannelConfig(theta, p1_bar, p2_bar, pr_bar)


#: label -> (base geometry, interpolation target, t, relay budget)
LABEL_FIXTURES = {
    "C1": (GEO_C1, None, 0.0, 2.0),
    "C2": (GEO_C2, None, 0.0, 2.0),
    "C3a": (GEO_MAIN, None, 0.0, 18.0),
    "C3b": (GEO_MAIN, None, 0.0, 0.01),
    "C3c": (GEO_MAIN, None, 0.0, 2.5),
    "B1_3a": (GEO_C1, GEO_MAIN, 0.2741830529017868, 18.0),
    "B2_3a": (GEO_C2, GEO_MAIN, 0.11868081002957512, 18.0),
    "B1_3b": (GEO_C1, GEO_MAIN, 0.8969911715255126, 0.01),
    "B2_3b": (GEO_C2, GEO_MAIN, 0.8438731764976117, 0.01),
    "B1_3c": (GEO_C1, GEO_MAIN, 0.8969911715251786, 0.4160176355945271),
    "B2_3c": (GEO_C2, GEO_MAIN, 0.8438731764976097, 0.21597226384862267),
}


def label_fixture(label: str) -> tuple[m.FadingEnsemble, m.ChannelConfig]:
    geo_a, geo_b, t, pr = LABEL_FIXTURES[label]
    e = ensemble(geo_a)
    if geo_b is not None:
        e = lerp(e, ensemble(geo_b), t)
    return e, config(pr)


def random_fixture(rng: np.random.Generator):
    """One random geometry ensemble and budget draw.

    Node positions uniform on [0, 1.5]^2, path-loss exponent in [2, 4],
    4-64 states, budgets in [0.1, 10], bandwidth split in {1/4, 1/2, 3/4}.
    """

    def point():
        return (float(rng.uniform(0.0, 1.5)), float(rng.uniform(0.0, 1.5)))

    geo = m.NodeGeometry(
        point(), point(), point(), point(), float(rng.uniform(2.0, 4.0))
    )
    n = int(rng.integers(4, 65))
    e = m.build_geometry_ensemble(geo, n, seed=int(rng.integers(0, 2**31)))
    cfg = m.ChannelConfig(
        float(rng.choice([0.25, 0.5, 0.75])),
        float(rng.uniform(0.1, 10.0)),
        float(rng.uniform(0.1, 10.0)),
        float(rng.uniform(0.1, 10.0)),
    )
    return e, cfg


def spec_for_outcome(outcome) -> WeightedKKTSpec:
    """Reconstruct the marginal-rate fraction structure the label solved."""
    label = str(outcome.label)
    alpha = outcome.duals.alpha
    if label == "C1":
        return WeightedKKTSpec(
            (),
            (FractionTerm(1.0, DEST, False),),
            (FractionTerm(1.0, RELAY, False),),
        )
    if label == "C2":
        return WeightedKKTSpec(
            (),
            (FractionTerm(1.0, RELAY, False),),
            (FractionTerm(1.0, DEST, False),),
        )
    if label == "C3a":
        return opportunistic_spec(RELAY)
    if label == "C3b":
        return opportunistic_spec(DEST)
    if label == "C3c":
        return equalizer_spec(alpha[0])
    return boundary_spec(label[1:].lower(), alpha)


def kkt_audit(outcome, e: m.FadingEnsemble, cfg: m.ChannelConfig) -> dict:
    """Stationarity / budget / complementary-slackness residuals of an outcome.

    Returns a dict of worst-case residuals:
      - ``stationarity``: max |f_k - nu_k ln2| over source states with
        positive power, and the relay marginal likewise;
      - ``budget``: max |E[P_k] - budget_k| / max(budget_k, 1) over
        transmitters with an active dual;
      - ``slack``: max positive excess E[P_k] - budget_k over transmitters
        with an inactive dual (complementary slackness).
    """
    spec = spec_for_outcome(outcome)
    pol = outcome.policy
    f1, f2 = kkt_fractions(spec, e, cfg.theta, pol.p1, pol.p2)
    duals = outcome.duals
    stat = 0.0
    for f, p, nu in ((f1, pol.p1, duals.nu1), (f2, pol.p2, duals.nu2)):
        active = p > 0.0
        if nu > 1e-12 and active.any():
            stat = max(stat, float(np.abs(f[active] - nu * LN2).max()))
    fr = e.g_dr / (1.0 + e.g_dr * pol.pr / (1.0 - cfg.theta))
    active_r = pol.pr > 0.0
    if duals.nu_r > 1e-12 and active_r.any():
        stat = max(stat, float(np.abs(fr[active_r] - duals.nu_r * LN2).max()))

    w = e.weights
    budget = 0.0
    slack = 0.0
    for p, nu, b in (
        (pol.p1, duals.nu1, cfg.p1_bar),
        (pol.p2, duals.nu2, cfg.p2_bar),
        (pol.pr, duals.nu_r, cfg.pr_bar),
    ):
        used = float(w @ p)
        if nu > 1e-12:
            budget = max(budget, abs(used - b) / max(b, 1.0))
        else:
            slack = max(slack, used - b)
    return {"stationarity": stat, "budget": budget, "slack": slack}


def lagrangian_grid_max(
    spec: WeightedKKTSpec,
    state: m.GainState,
    duals: tuple[float, float],
    theta: float,
    resolution: int = 400,
) -> tuple[float, float, float]:
    """Dense-grid maximum of the per-state Lagrangian, in bits.

    The grid spans [0, P1_axis] x [0, P2_axis]: the axis roots of
    f_k(P_k; P_j = 0) = nu_k ln2 upper-bound each coordinate of any
    stationary point because f_k decreases in both powers.  Returns
    (grid max, P1 box edge, P2 box edge).
    """
    from marcopt import _kernels

    nu1, nu2 = duals
    e1 = m.FadingEnsemble([state], [1.0])
    G1, C1 = spec.term_tables(e1, 1)
    G2, C2 = spec.term_tables(e1, 2)
    cands = _kernels.axis_candidates_all(G1, C1, G2, C2, nu1, nu2, True, True, theta)
    p1_hi = float(cands[0][0])
    p2_hi = float(cands[2][0])
    P1 = np.linspace(0.0, max(p1_hi, 0.0), resolution)[:, None]
    P2 = np.linspace(0.0, max(p2_hi, 0.0), resolution)[None, :]
    val = np.zeros((resolution, resolution))
    g = {RELAY: (state.g_r1, state.g_r2), DEST: (state.g_d1, state.g_d2)}
    for t in spec.joint_terms:
        g1c, g2c = g[t.gain_column]
        val += t.coefficient * np.log2(1.0 + (g1c * P1 + g2c * P2) / theta)
    for t in spec.solo_terms_1:
        val += t.coefficient * np.log2(1.0 + g[t.gain_column][0] * P1 / theta)
    for t in spec.solo_terms_2:
        val += t.coefficient * np.log2(1.0 + g[t.gain_column][1] * P2 / theta)
    val = theta * val - nu1 * P1 - nu2 * P2
    return float(val.max()), p1_hi, p2_hi


def lagrangian_value(
    spec: WeightedKKTSpec,
    state: m.GainState,
    duals: tuple[float, float],
    theta: float,
    p1: float,
    p2: float,
) -> float:
    """Per-state Lagrangian at one power pair, in bits."""
    g = {RELAY: (state.g_r1, state.g_r2), DEST: (state.g_d1, state.g_d2)}
    val = 0.0
    for t in spec.joint_terms:
        g1c, g2c = g[t.gain_column]
        val += t.coefficient * np.log2(1.0 + (g1c * p1 + g2c * p2) / theta)
    for t in spec.solo_terms_1:
        val += t.coefficient * np.log2(1.0 + g[t.gain_column][0] * p1 / theta)
    for t in spec.solo_terms_2:
        val += t.coefficient * np.log2(1.0 + g[t.gain_column][1] * p2 / theta)
    return theta * val - duals[0] * p1 - duals[1] * p2

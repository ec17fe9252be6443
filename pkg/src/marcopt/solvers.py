"""Case-by-case optimal power policies via water-filling and dual calibration.

Three families of solvers live here:

* decoupled water-filling for the two cases whose sum-rate splits into
  independent single-link terms,
* opportunistic multiaccess water-filling (one receiver's joint bound is
  the objective; at most one source transmits per state),
* the equalizer and six constrained boundary policies, where one or two
  extra multipliers enforce equality of rate bounds and the per-state
  source problem is no longer a water-filling solution.

All source-side problems reduce to the same per-state structure: each
user's marginal-rate function f_k is a convex combination of fractions
c * g / (1 + <gains, powers>/theta), and the calibrated duals (nu1, nu2)
make the weighted average powers meet their budgets.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from . import _kernels
from .ensemble import FadingEnsemble, GainState
from .errors import NoConvergenceError, NotInCaseError
from .rates import LN2, ChannelConfig, PowerPolicy, corner_rates

RELAY = "relay"
DEST = "dest"

#: equality-constraint tolerance for alpha searches, in bits
EQ_TOL = 1e-6
#: budget residual tolerance is BUDGET_TOL * max(budget, 1)
BUDGET_TOL = 1e-9
#: maximum bisection iterations per dual-search level
MAX_DUAL_ITER = 200

BOUNDARY_CASE_IDS = ("1_3a", "2_3a", "1_3b", "2_3b", "1_3c", "2_3c")


@dataclass(frozen=True)
class DualVariables:
    """Water-filling levels and boundary-condition multipliers."""

    nu1: float
    nu2: float
    nu_r: float
    alpha: tuple[float, ...] = ()


@dataclass(frozen=True)
class FractionTerm:
    """One fraction of a user's marginal-rate function f_k.

    ``joint`` terms share the receiver's multiaccess denominator between
    both users; ``individual`` terms see only the owner's power.
    """

    coefficient: float
    gain_column: str  # RELAY or DEST
    joint: bool


@dataclass(frozen=True)
class WeightedKKTSpec:
    """The fraction structure of f_1 and f_2 for one case.

    Joint terms are listed once and apply to both users; per-user
    coefficients (joint + individual) must sum to one.
    """

    joint_terms: tuple[FractionTerm, ...]
    solo_terms_1: tuple[FractionTerm, ...] = ()
    solo_terms_2: tuple[FractionTerm, ...] = ()

    def __post_init__(self):
        for term in self.joint_terms + self.solo_terms_1 + self.solo_terms_2:
            if not (-1e-12 <= term.coefficient <= 1.0 + 1e-12):
                raise ValueError(f"coefficient out of [0,1]: {term.coefficient}")
            if term.gain_column not in (RELAY, DEST):
                raise ValueError(f"unknown gain column {term.gain_column!r}")
        for solo in (self.solo_terms_1, self.solo_terms_2):
            total = sum(t.coefficient for t in self.joint_terms) + sum(
                t.coefficient for t in solo
            )
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"per-user coefficients sum to {total}, expected 1")

    def user_terms(self, user: int) -> tuple[FractionTerm, ...]:
        solo = self.solo_terms_1 if user == 1 else self.solo_terms_2
        return self.joint_terms + solo

    def term_tables(self, e: FadingEnsemble, user: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-state gain matrix and coefficient vector for ``user``'s axis problem."""
        terms = self.user_terms(user)
        cols = []
        for t in terms:
            gains = e.source_gains(t.gain_column)
            cols.append(gains[:, user - 1])
        G = np.column_stack(cols) if cols else np.zeros((e.n_states, 0))
        C = np.array([t.coefficient for t in terms], dtype=np.float64)
        return np.ascontiguousarray(G), C


def opportunistic_spec(receiver: str) -> WeightedKKTSpec:
    """Single joint fraction on one receiver's gains (cases 3a / 3b)."""
    return WeightedKKTSpec(joint_terms=(FractionTerm(1.0, receiver, True),))


def equalizer_spec(alpha: float) -> WeightedKKTSpec:
    """Two joint fractions, (1-alpha) on relay gains and alpha on destination."""
    return WeightedKKTSpec(
        joint_terms=(
            FractionTerm(1.0 - alpha, RELAY, True),
            FractionTerm(alpha, DEST, True),
        )
    )


def boundary_spec(case_id: str, alpha: tuple[float, ...]) -> WeightedKKTSpec:
    """Fraction structure for one of the six boundary cases.

    Single-multiplier cases mix a joint fraction on the case-3 receiver
    with one individual fraction per user on that user's paired link;
    the (l,3c) cases carry both joint fractions plus the individual pair.
    """
    if case_id in ("1_3a", "2_3a", "1_3b", "2_3b"):
        (a,) = alpha
        joint_col = RELAY if case_id.endswith("3a") else DEST
        if case_id.startswith("1"):
            solo_cols = (DEST, RELAY)  # pairing (1,d),(2,r)
        else:
            solo_cols = (RELAY, DEST)  # pairing (1,r),(2,d)
        return WeightedKKTSpec(
            joint_terms=(FractionTerm(1.0 - a, joint_col, True),),
            solo_terms_1=(FractionTerm(a, solo_cols[0], False),),
            solo_terms_2=(FractionTerm(a, solo_cols[1], False),),
        )
    if case_id in ("1_3c", "2_3c"):
        a1, a2 = alpha
        a3 = 1.0 - a1 - a2
        solo_cols = (DEST, RELAY) if case_id.startswith("1") else (RELAY, DEST)
        return WeightedKKTSpec(
            joint_terms=(
                FractionTerm(a3, RELAY, True),
                FractionTerm(a2, DEST, True),
            ),
            solo_terms_1=(FractionTerm(a1, solo_cols[0], False),),
            solo_terms_2=(FractionTerm(a1, solo_cols[1], False),),
        )
    raise ValueError(f"unknown boundary case {case_id!r}")


def kkt_fractions(
    spec: WeightedKKTSpec,
    e: FadingEnsemble,
    theta: float,
    p1: np.ndarray,
    p2: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate f_1 and f_2 at a full per-state power pair (audit helper)."""
    powers = (p1, p2)
    out = []
    for user in (1, 2):
        f = np.zeros(e.n_states)
        for t in spec.user_terms(user):
            gains = e.source_gains(t.gain_column)
            gk = gains[:, user - 1]
            if t.joint:
                den = 1.0 + (gains[:, 0] * p1 + gains[:, 1] * p2) / theta
            else:
                den = 1.0 + gk * powers[user - 1] / theta
            f = f + t.coefficient * gk / den
        out.append(f)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Water-filling


def waterfill(
    gains: np.ndarray, weights: np.ndarray, budget: float, bandwidth: float
) -> tuple[np.ndarray, float]:
    """Classic single-link water-filling over a weighted gain sequence.

    Powers are (bandwidth/(nu ln2) - bandwidth/g)^+ with the level nu set so
    the weighted average power equals the budget.  The level is found
    exactly from the sorted inverse-gain breakpoints.  Degenerate inputs
    (zero budget, no usable gain) give the zero policy with nu = 0
    (inactive).
    """
    gains = np.asarray(gains, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    powers = np.zeros_like(gains)
    mask = (gains > 0.0) & (weights > 0.0)
    if budget <= 0.0 or not mask.any():
        return powers, 0.0
    c = bandwidth / gains[mask]
    order = np.argsort(c, kind="stable")
    cs = c[order]
    ws = weights[mask][order]
    W = np.cumsum(ws)
    S = np.cumsum(ws * cs)
    lam_candidates = (budget + S) / W
    level = lam_candidates[-1]
    for j in range(cs.size):
        lam = lam_candidates[j]
        if lam >= cs[j] and (j + 1 == cs.size or lam <= cs[j + 1]):
            level = lam
            break
    usable = gains > 0.0
    powers[usable] = np.maximum(level - bandwidth / gains[usable], 0.0)
    nu = bandwidth / (level * LN2)
    return powers, nu


# ---------------------------------------------------------------------------
# Dual calibration


@dataclass
class SourceCalibration:
    """Calibrated source powers and water-filling duals for one spec."""

    p1: np.ndarray
    p2: np.ndarray
    nu1: float
    nu2: float


def per_state_axis_solve(
    state: GainState,
    spec: WeightedKKTSpec,
    duals: tuple[float, float],
    theta: float,
) -> tuple[float, float]:
    """Optimal single-state source powers at fixed duals.

    Each user's axis candidate solves f_k(P_k; P_j=0) = nu_k ln2 (unique,
    f_k strictly decreasing); the winner is the candidate with the larger
    per-state Lagrangian, ties broken toward user 1 then toward zero power.
    """
    nu1, nu2 = duals
    e1 = FadingEnsemble([state], [1.0])
    G1, C1 = spec.term_tables(e1, 1)
    G2, C2 = spec.term_tables(e1, 2)
    P1, P2 = _kernels.axis_select(G1, C1, G2, C2, nu1, nu2, True, True, theta)
    return float(P1[0]), float(P2[0])


def _coupled_tables(spec: WeightedKKTSpec, e: FadingEnsemble):
    """Joint/individual gain tables for the coupled per-state structure.

    Returns (GJ1, GJ2, CJ, GS1, CS1, GS2, CS2): joint-term gains per user
    with shared coefficients, then each user's individual-term gains and
    coefficients.
    """
    n = e.n_states

    def stack(terms, user):
        if not terms:
            return np.zeros((n, 0)), np.zeros(0)
        cols = [e.source_gains(t.gain_column)[:, user - 1] for t in terms]
        C = np.array([t.coefficient for t in terms], dtype=np.float64)
        return np.ascontiguousarray(np.column_stack(cols)), C

    GJ1, CJ = stack(list(spec.joint_terms), 1)
    GJ2, _ = stack(list(spec.joint_terms), 2)
    GS1, CS1 = stack(list(spec.solo_terms_1), 1)
    GS2, CS2 = stack(list(spec.solo_terms_2), 2)
    return GJ1, GJ2, CJ, GS1, CS1, GS2, CS2


#: coefficients at or below this weight are treated as absent
_TERM_EPS = 1e-12


def _effective_spec(spec: WeightedKKTSpec) -> WeightedKKTSpec:
    """Drop vanishing-coefficient fractions (limits of the alpha searches)."""
    if all(
        t.coefficient > _TERM_EPS
        for t in spec.joint_terms + spec.solo_terms_1 + spec.solo_terms_2
    ):
        return spec
    keep = lambda terms: tuple(t for t in terms if t.coefficient > _TERM_EPS)
    return WeightedKKTSpec(
        joint_terms=keep(spec.joint_terms),
        solo_terms_1=keep(spec.solo_terms_1),
        solo_terms_2=keep(spec.solo_terms_2),
    )


def _merged_joint_spec(spec: WeightedKKTSpec, e: FadingEnsemble) -> WeightedKKTSpec:
    """Collapse joint fractions whose gain columns coincide on ``e``.

    Two joint fractions over per-state identical gains are one fraction
    with the summed coefficient; collapsing restores the winner-take-all
    per-state structure (and its exact tie handling) when an ensemble
    makes two receivers indistinguishable.
    """
    merged: list[tuple[FractionTerm, np.ndarray]] = []
    for t in spec.joint_terms:
        g = e.source_gains(t.gain_column)
        for i, (u, gu) in enumerate(merged):
            if np.array_equal(g, gu):
                merged[i] = (
                    FractionTerm(u.coefficient + t.coefficient, u.gain_column, True),
                    gu,
                )
                break
        else:
            merged.append((t, g))
    if len(merged) == len(spec.joint_terms):
        return spec
    return WeightedKKTSpec(
        tuple(t for t, _ in merged), spec.solo_terms_1, spec.solo_terms_2
    )


def _is_coupled(spec: WeightedKKTSpec) -> bool:
    """Whether the per-state Lagrangian is strictly concave in (P1, P2).

    True when either user has an individual fraction or there are two or
    more joint fractions: then the unique per-state optimum may put both
    users at positive power.  A single joint fraction is winner-take-all
    (the Lagrangian is linear along fixed-aggregate segments).
    """
    if spec.solo_terms_1 or spec.solo_terms_2:
        return True
    return len(spec.joint_terms) >= 2


def per_state_solve(
    state: GainState,
    spec: WeightedKKTSpec,
    duals: tuple[float, float],
    theta: float,
) -> tuple[float, float]:
    """Optimal single-state source powers at fixed duals, any spec.

    Single-joint-fraction specs are opportunistic (winner-take-all axis
    candidates); specs with individual fractions or two or more joint
    fractions have a strictly concave per-state Lagrangian whose unique
    KKT point may put both users at positive power.
    """
    e1 = FadingEnsemble([state], [1.0])
    spec = _merged_joint_spec(_effective_spec(spec), e1)
    if not _is_coupled(spec):
        return per_state_axis_solve(state, spec, duals, theta)
    nu1, nu2 = duals
    GJ1, GJ2, CJ, GS1, CS1, GS2, CS2 = _coupled_tables(spec, e1)
    p1, p2 = _kernels.coupled_state_solve(
        GJ1[0], GJ2[0], CJ, GS1[0], CS1, GS2[0], CS2, nu1, nu2, True, True, theta
    )
    return float(p1), float(p2)


def _winner_take_all(p1c, v1, p2c, v2):
    """Per-state assignment: larger Lagrangian wins, ties to user 1 then zero."""
    win1 = (v1 >= v2) & (v1 > 0.0)
    win2 = ~win1 & (v2 > 0.0)
    return np.where(win1, p1c, 0.0), np.where(win2, p2c, 0.0)


#: loose relative tolerance for detecting candidate winner ties before polish
TIE_DETECT_TOL = 1e-6

# per-state option codes used by the tie machinery
_U1, _U2, _SILENT = 0, 1, 2


def _axis_fprime(G, C, p, theta):
    """Slope df_k/dP at the axis candidates, per state (strictly negative)."""
    den = 1.0 + G * p[:, None] / theta
    return -(C * G * G / (theta * den * den)).sum(axis=1)


def _detect_ties(p1c, v1, p2c, v2, act1, act2, tau):
    """Per-state winner structure plus near-tied (winner, runner-up) pairs.

    Returns (win1, win2, ties) where ties is a list of
    (state, winner_option, runner_option) for states whose top two
    options are within ``tau`` of each other.
    """
    n = v1.size
    win1 = np.zeros(n, dtype=np.bool_)
    win2 = np.zeros(n, dtype=np.bool_)
    ties = []
    for i in range(n):
        options = [(0.0, _SILENT)]
        if act1 and p1c[i] > 0.0:
            options.append((v1[i], _U1))
        if act2 and p2c[i] > 0.0:
            options.append((v2[i], _U2))
        options.sort(key=lambda o: (-o[0], o[1]))
        top_kind = options[0][1]
        if top_kind == _U1:
            win1[i] = True
        elif top_kind == _U2:
            win2[i] = True
        if len(options) > 1 and options[0][0] - options[1][0] <= tau:
            ties.append((i, top_kind, options[1][1]))
    return win1, win2, ties


def _polish_ties(
    candidates_fn, G1, C1, G2, C2, w, theta, b1, b2, act1, act2, nu1, nu2, ties
):
    """Newton solve of the budget + tie-equality system at frozen structure.

    With finitely many states a budget generically lands on a jump of the
    expected power, i.e. some states sit exactly where two of their
    per-state options (user 1, user 2, silence) have equal Lagrangian
    value and the optimal policy splits them.  Each tie adds one equality
    and one split fraction, so the system (budgets, tie gaps) over
    (nu1, nu2, fractions) stays square; Newton from the bisection output
    converges quadratically.  Returns (nu1, nu2, p1, p2, ok).
    """
    T = len(ties)
    lam = np.full(T, 0.5)
    vscale = 1e-300
    for _ in range(60):
        p1c, v1, p2c, v2 = candidates_fn(nu1, nu2)
        win1, win2, _ = _detect_ties(p1c, v1, p2c, v2, act1, act2, -1.0)
        for i, _, _ in ties:
            win1[i] = win2[i] = False
        dp1 = LN2 / _axis_fprime(G1, C1, p1c, theta) if act1 else np.zeros_like(p1c)
        dp2 = LN2 / _axis_fprime(G2, C2, p2c, theta) if act2 else np.zeros_like(p2c)
        vscale = max(float(np.maximum(v1, v2).max()), 1e-300)
        na = int(act1) + int(act2)
        rows = na + T
        R = np.zeros(rows)
        J = np.zeros((rows, rows))
        i1 = 0
        i2 = int(act1)  # row/column of the nu2 unknown and budget-2 equation
        if act1:
            R[i1] = float(w[win1] @ p1c[win1]) - b1
            J[i1, i1] = float(w[win1] @ dp1[win1])
        if act2:
            R[i2] = float(w[win2] @ p2c[win2]) - b2
            J[i2, i2] = float(w[win2] @ dp2[win2])
        for t, (i, top, runner) in enumerate(ties):
            col = na + t
            gap = 0.0
            for kind, weight, dweight in ((top, lam[t], 1.0), (runner, 1.0 - lam[t], -1.0)):
                if kind == _U1:
                    gap += (1.0 if dweight > 0 else -1.0) * v1[i]
                    R[i1] += weight * w[i] * p1c[i]
                    J[i1, i1] += weight * w[i] * dp1[i]
                    J[i1, col] = dweight * w[i] * p1c[i]
                    J[col, i1] += (1.0 if dweight > 0 else -1.0) * (-LN2 * p1c[i])
                elif kind == _U2:
                    gap += (1.0 if dweight > 0 else -1.0) * v2[i]
                    R[i2] += weight * w[i] * p2c[i]
                    J[i2, i2] += weight * w[i] * dp2[i]
                    J[i2, col] = dweight * w[i] * p2c[i]
                    J[col, i2] += (1.0 if dweight > 0 else -1.0) * (-LN2 * p2c[i])
            R[col] = gap
        scale = np.concatenate(
            [np.full(na, max(b1, b2, 1.0)), np.full(T, vscale)]
        )
        if float(np.max(np.abs(R / scale))) <= 1e-13:
            break
        try:
            dx = np.linalg.solve(J, -R)
        except np.linalg.LinAlgError:
            dx, *_ = np.linalg.lstsq(J, -R, rcond=None)
        if act1:
            nu1 = max(nu1 + float(np.clip(dx[i1], -0.5 * nu1, 0.5 * nu1)), 1e-300)
        if act2:
            nu2 = max(nu2 + float(np.clip(dx[i2], -0.5 * nu2, 0.5 * nu2)), 1e-300)
        lam = np.clip(lam + dx[na:], 0.0, 1.0)
    p1c, v1, p2c, v2 = candidates_fn(nu1, nu2)
    win1, win2, _ = _detect_ties(p1c, v1, p2c, v2, act1, act2, -1.0)
    for i, _, _ in ties:
        win1[i] = win2[i] = False
    p1 = np.where(win1, p1c, 0.0)
    p2 = np.where(win2, p2c, 0.0)
    ok = True
    for t, (i, top, runner) in enumerate(ties):
        for kind, weight in ((top, lam[t]), (runner, 1.0 - lam[t])):
            if kind == _U1:
                p1[i] += weight * p1c[i]
            elif kind == _U2:
                p2[i] += weight * p2c[i]
        gap = (v1[i] if top == _U1 else v2[i] if top == _U2 else 0.0) - (
            v1[i] if runner == _U1 else v2[i] if runner == _U2 else 0.0
        )
        if abs(gap) > 1e-10 * vscale:
            ok = False
    return nu1, nu2, p1, p2, ok


def _calibrate_coupled(spec, e, theta, w, b1, b2, tol1, tol2, act1, act2):
    """Dual calibration for specs with a strictly concave per-state Lagrangian.

    The coupled per-state optimum is unique and continuous in the duals,
    so the nested bracketing search needs no tie splitting.
    """
    n = e.n_states
    if not act1 and not act2:
        return SourceCalibration(np.zeros(n), np.zeros(n), 0.0, 0.0)
    GJ1, GJ2, CJ, GS1, CS1, GS2, CS2 = _coupled_tables(spec, e)
    if act1 and act2:
        nu1, nu2 = _kernels.calibrate_pair_coupled(
            GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, w, theta, b1, b2, tol1, tol2
        )
    elif act1:
        nu1, _ = _kernels._inner_nu1_coupled(
            GJ1, GJ2, CJ, GS1, CS1, GS2, CS2, np.inf, False, theta, w, b1, tol1
        )
        nu2 = 0.0
    else:
        # swap the user slots so the inner search runs on source 2's tables
        nu2, _ = _kernels._inner_nu1_coupled(
            GJ2, GJ1, CJ, GS2, CS2, GS1, CS1, np.inf, False, theta, w, b2, tol2
        )
        nu1 = 0.0
    p1, p2 = _kernels.coupled_policies(
        GJ1, GJ2, CJ, GS1, CS1, GS2, CS2,
        nu1 if act1 else np.inf, nu2 if act2 else np.inf, act1, act2, theta,
    )
    cal = SourceCalibration(p1, p2, nu1 if act1 else 0.0, nu2 if act2 else 0.0)
    r1 = abs(float(w @ p1) - b1) if act1 else 0.0
    r2 = abs(float(w @ p2) - b2) if act2 else 0.0
    if r1 > 2.0 * tol1 or r2 > 2.0 * tol2:
        raise NoConvergenceError(
            f"no-convergence: budget residuals ({r1:.3e}, {r2:.3e}) "
            f"exceed tolerance after {MAX_DUAL_ITER} iterations"
        )
    return cal


def calibrate_duals(
    spec: WeightedKKTSpec,
    e: FadingEnsemble,
    config: ChannelConfig,
    *,
    tol_scale: float = 1.0,
) -> SourceCalibration:
    """Find (nu1, nu2) meeting both source budgets under ``spec``.

    Nested bracketing search: the inner level solves nu1 given nu2 (each
    source's average power decreases in its own dual), the outer level
    solves nu2.  Budgets landing on a winner-flip discontinuity are met
    by splitting the tied state between its per-state options; the inner
    level repairs its own ties, which keeps the outer residual continuous
    except at user-2-versus-silence ties, repaired at the outer level.
    A source with zero budget or no usable gain stays silent with an
    inactive dual.
    """
    theta = config.theta
    w = e.weights
    b1, b2 = config.p1_bar, config.p2_bar
    spec = _merged_joint_spec(_effective_spec(spec), e)
    G1, C1 = spec.term_tables(e, 1)
    G2, C2 = spec.term_tables(e, 2)
    tol1 = 0.5 * BUDGET_TOL * max(b1, 1.0) * tol_scale
    tol2 = 0.5 * BUDGET_TOL * max(b2, 1.0) * tol_scale
    act1 = b1 > 0.0 and float((G1 @ C1).max()) > 0.0
    act2 = b2 > 0.0 and float((G2 @ C2).max()) > 0.0
    n = e.n_states

    if _is_coupled(spec):
        return _calibrate_coupled(
            spec, e, theta, w, b1, b2, tol1, tol2, act1, act2
        )

    def candidates(nu1, nu2):
        return _kernels.axis_candidates_all(
            G1, C1, G2, C2, nu1, nu2, act1, act2, theta
        )

    if not act1 and not act2:
        return SourceCalibration(np.zeros(n), np.zeros(n), 0.0, 0.0)

    def finalize(nu1, nu2, p1, p2, cands):
        """Polish unmet budgets by solving the tied-state system exactly."""
        r1 = abs(float(w @ p1) - b1) if act1 else 0.0
        r2 = abs(float(w @ p2) - b2) if act2 else 0.0
        if r1 <= tol1 and r2 <= tol2:
            return nu1, nu2, p1, p2
        p1c, v1, p2c, v2 = cands
        vscale = max(float(np.maximum(v1, v2).max()), 1e-300)
        _, _, ties = _detect_ties(
            p1c, v1, p2c, v2, act1, act2, TIE_DETECT_TOL * vscale
        )

        def gap_of(tie):
            i, top, runner = tie
            val = {_U1: v1[i], _U2: v2[i], _SILENT: 0.0}
            return val[top] - val[runner]

        ties.sort(key=gap_of)
        # over-detected near-ties make the Newton system inconsistent, so
        # retry with the widest-gap candidates dropped
        for k in range(len(ties), 0, -1):
            n1, n2, q1, q2, ok = _polish_ties(
                candidates, G1, C1, G2, C2, w, theta,
                b1, b2, act1, act2, nu1, nu2, ties[:k],
            )
            if (
                ok
                and (not act1 or abs(float(w @ q1) - b1) <= tol1)
                and (not act2 or abs(float(w @ q2) - b2) <= tol2)
            ):
                return n1, n2, q1, q2
        return nu1, nu2, p1, p2

    if act1 and act2:
        nu1, nu2 = _kernels.calibrate_pair(G1, C1, G2, C2, w, theta, b1, b2, tol1, tol2)
    elif act1:
        # only source 1 transmits; the inner search at an infinite nu2
        nu1, _ = _kernels._inner_nu1(G1, C1, G2, C2, np.inf, False, theta, w, b1, tol1)
        nu2 = 0.0
    else:
        # only source 2: run the slot-1 search on source 2's tables
        nu2, _ = _kernels._inner_nu1(G2, C2, G2, C2, np.inf, False, theta, w, b2, tol2)
        nu1 = 0.0
    cands = candidates(nu1 if act1 else np.inf, nu2 if act2 else np.inf)
    p1, p2 = _winner_take_all(*cands)
    nu1, nu2, p1, p2 = finalize(nu1, nu2, p1, p2, cands)
    cal = SourceCalibration(p1, p2, nu1 if act1 else 0.0, nu2 if act2 else 0.0)

    r1 = abs(float(w @ cal.p1) - b1) if act1 else 0.0
    r2 = abs(float(w @ cal.p2) - b2) if act2 else 0.0
    if r1 > 2.0 * tol1 or r2 > 2.0 * tol2:
        raise NoConvergenceError(
            f"no-convergence: budget residuals ({r1:.3e}, {r2:.3e}) "
            f"exceed tolerance after {MAX_DUAL_ITER} iterations"
        )
    return cal


# ---------------------------------------------------------------------------
# Case solvers


def _relay_waterfill(e: FadingEnsemble, config: ChannelConfig):
    return waterfill(e.g_dr, e.weights, config.pr_bar, 1.0 - config.theta)


def solve_case1(
    e: FadingEnsemble, config: ChannelConfig
) -> tuple[PowerPolicy, DualVariables]:
    """Three decoupled water-filling problems: user 1 on its destination
    link, user 2 on its relay link, the relay on its own link."""
    th = config.theta
    p1, nu1 = waterfill(e.g_d1, e.weights, config.p1_bar, th)
    p2, nu2 = waterfill(e.g_r2, e.weights, config.p2_bar, th)
    pr, nur = _relay_waterfill(e, config)
    return PowerPolicy(p1, p2, pr), DualVariables(nu1, nu2, nur)


def solve_case2(
    e: FadingEnsemble, config: ChannelConfig
) -> tuple[PowerPolicy, DualVariables]:
    """Mirror of case 1: user 1 on its relay link, user 2 on its destination link."""
    th = config.theta
    p1, nu1 = waterfill(e.g_r1, e.weights, config.p1_bar, th)
    p2, nu2 = waterfill(e.g_d2, e.weights, config.p2_bar, th)
    pr, nur = _relay_waterfill(e, config)
    return PowerPolicy(p1, p2, pr), DualVariables(nu1, nu2, nur)


def solve_opportunistic(
    receiver: str, e: FadingEnsemble, config: ChannelConfig
) -> tuple[PowerPolicy, DualVariables]:
    """Maximize one receiver's joint bound: opportunistic water-filling.

    At most one source is active per state whenever the dual-scaled gains
    differ; the relay water-fills its own link independently.
    """
    cal = calibrate_duals(opportunistic_spec(receiver), e, config)
    pr, nur = _relay_waterfill(e, config)
    return PowerPolicy(cal.p1, cal.p2, pr), DualVariables(cal.nu1, cal.nu2, nur)


def solve_equalizer(
    e: FadingEnsemble, config: ChannelConfig
) -> tuple[PowerPolicy, DualVariables]:
    """Equalize the relay and destination joint bounds (case 3c).

    Outer bracketing secant on alpha in [0,1]; the equalization residual
    (relay bound minus destination bound) is nonincreasing in alpha.  The
    relay policy is plain water-filling: at fixed relay budget the alpha
    scaling of its first term is absorbed by the calibrated level.
    """
    pr, nur = _relay_waterfill(e, config)

    def solve_at(alpha):
        cal = calibrate_duals(equalizer_spec(alpha), e, config)
        policy = PowerPolicy(cal.p1, cal.p2, pr)
        summary = corner_rates(policy, e, config)
        return summary.sum_relay - summary.sum_dest, policy, cal

    r_lo, pol_lo, cal_lo = solve_at(0.0)
    r_hi, pol_hi, cal_hi = solve_at(1.0)
    if abs(r_lo) <= EQ_TOL and abs(r_hi) <= EQ_TOL:
        # residual vanishes identically; midpoint convention
        _, policy, cal = solve_at(0.5)
        return policy, DualVariables(cal.nu1, cal.nu2, nur, (0.5,))
    if r_lo < -EQ_TOL:
        raise NotInCaseError("not-in-case: relay bound below destination at alpha=0")
    if r_hi > EQ_TOL:
        raise NotInCaseError("not-in-case: relay bound above destination at alpha=1")
    if abs(r_lo) <= EQ_TOL:
        return pol_lo, DualVariables(cal_lo.nu1, cal_lo.nu2, nur, (0.0,))
    if abs(r_hi) <= EQ_TOL:
        return pol_hi, DualVariables(cal_hi.nu1, cal_hi.nu2, nur, (1.0,))
    found = _alpha_root(solve_at, 0.0, 1.0, r_lo, r_hi)
    if found is None:
        raise NoConvergenceError("no-convergence: equalizer residual did not close")
    mid, (policy, cal) = found
    return policy, DualVariables(cal.nu1, cal.nu2, nur, (mid,))


def _alpha_root(res, lo, hi, r_lo, r_hi):
    """Bracketing secant (Illinois) on a scalar residual over [lo, hi].

    ``res(alpha)`` returns (residual, *payload); the endpoints' residuals
    must have opposite signs.  Returns (alpha, payload) at the first point
    within EQ_TOL of the root, or None if the bracket collapses first.
    """
    side = 0
    for _ in range(MAX_DUAL_ITER):
        if r_hi != r_lo:
            x = (lo * r_hi - hi * r_lo) / (r_hi - r_lo)
        else:
            x = 0.5 * (lo + hi)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        r, *payload = res(x)
        if abs(r) <= EQ_TOL:
            return x, payload
        if (r > 0.0) == (r_lo > 0.0):
            lo = x
            r_lo = r
            if side == 1:
                r_hi *= 0.5
            side = 1
        else:
            hi = x
            r_hi = r
            if side == -1:
                r_lo *= 0.5
            side = -1
        if hi - lo <= 1e-15:
            break
    return None


_BOUNDARY_RESIDUALS = {
    # signed so the residual is positive on the pure-case-3 side (alpha = 0)
    "1_3a": lambda s: s.rmin_relay[0] - s.rmax_dest[0],
    "2_3a": lambda s: s.rmin_relay[1] - s.rmax_dest[1],
    "1_3b": lambda s: s.rmin_dest[1] - s.rmax_relay[1],
    "2_3b": lambda s: s.rmin_dest[0] - s.rmax_relay[0],
}

_BOUNDARY_RESIDUALS_3C = {
    "1_3c": (
        lambda s: s.rmin_relay[0] - s.rmax_dest[0],
        lambda s: s.rmin_dest[1] - s.rmax_relay[1],
    ),
    "2_3c": (
        lambda s: s.rmin_dest[0] - s.rmax_relay[0],
        lambda s: s.rmin_relay[1] - s.rmax_dest[1],
    ),
}


def solve_boundary(
    case_id: str, e: FadingEnsemble, config: ChannelConfig
) -> tuple[PowerPolicy, DualVariables]:
    """Constrained boundary policy for one of the six transition cases.

    Single-multiplier cases run a bracketing secant on the case's
    equality residual;
    the (l,3c) cases nest a bisection per residual over the multiplier
    simplex, with a 1/64 grid scan plus local refinement as fallback when
    the nested brackets fail.
    """
    if case_id not in BOUNDARY_CASE_IDS:
        raise ValueError(f"unknown boundary case {case_id!r}")
    pr, nur = _relay_waterfill(e, config)

    def evaluate(alpha: tuple[float, ...], tol_scale: float = 1.0):
        cal = calibrate_duals(
            boundary_spec(case_id, alpha), e, config, tol_scale=tol_scale
        )
        policy = PowerPolicy(cal.p1, cal.p2, pr)
        summary = corner_rates(policy, e, config)
        return policy, cal, summary

    if case_id in _BOUNDARY_RESIDUALS:
        residual_of = _BOUNDARY_RESIDUALS[case_id]

        def res(a):
            policy, cal, summary = evaluate((a,))
            return residual_of(summary), policy, cal

        r_lo, pol_lo, cal_lo = res(0.0)
        if abs(r_lo) <= EQ_TOL:
            return pol_lo, DualVariables(cal_lo.nu1, cal_lo.nu2, nur, (0.0,))
        r_hi, pol_hi, cal_hi = res(1.0)
        if abs(r_hi) <= EQ_TOL:
            return pol_hi, DualVariables(cal_hi.nu1, cal_hi.nu2, nur, (1.0,))
        if (r_lo > 0.0) == (r_hi > 0.0):
            raise NotInCaseError(
                f"not-in-case: no multiplier zeroes the {case_id} equality"
            )
        found = _alpha_root(res, 0.0, 1.0, r_lo, r_hi)
        if found is None:
            raise NoConvergenceError(
                f"no-convergence: {case_id} equality residual did not close"
            )
        mid, (policy, cal) = found
        return policy, DualVariables(cal.nu1, cal.nu2, nur, (mid,))

    return _solve_boundary_3c(case_id, e, config, evaluate, pr, nur)


def _solve_boundary_3c(case_id, e, config, evaluate, pr, nur):
    res1_of, res2_of = _BOUNDARY_RESIDUALS_3C[case_id]

    def residuals(a1, a2, tol_scale=1.0):
        policy, cal, summary = evaluate((a1, a2), tol_scale)
        return res1_of(summary), res2_of(summary), policy, cal

    def inner(a2):
        """Best a1 in [0, 1-a2] for the first equality; may fail to bracket."""
        top = 1.0 - a2
        r_lo = residuals(0.0, a2)
        if abs(r_lo[0]) <= EQ_TOL:
            return 0.0, r_lo
        r_hi = residuals(top, a2)
        if abs(r_hi[0]) <= EQ_TOL:
            return top, r_hi
        if (r_lo[0] > 0.0) == (r_hi[0] > 0.0):
            best = r_lo if abs(r_lo[0]) < abs(r_hi[0]) else r_hi
            return (0.0 if best is r_lo else top), best
        lo, hi = 0.0, top
        sign_lo = r_lo[0] > 0.0
        r_mid = r_lo
        mid = lo
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            r_mid = residuals(mid, a2)
            if abs(r_mid[0]) <= EQ_TOL:
                break
            if (r_mid[0] > 0.0) == sign_lo:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-14:
                break
        return mid, r_mid

    # nested bracketing on the second residual
    a1_lo, r_at0 = inner(0.0)
    if abs(r_at0[0]) <= EQ_TOL and abs(r_at0[1]) <= EQ_TOL:
        _, _, policy, cal = r_at0
        return policy, DualVariables(cal.nu1, cal.nu2, nur, (a1_lo, 0.0))
    a1_hi, r_at1 = inner(1.0)
    if abs(r_at1[0]) <= EQ_TOL and abs(r_at1[1]) <= EQ_TOL:
        _, _, policy, cal = r_at1
        return policy, DualVariables(cal.nu1, cal.nu2, nur, (a1_hi, 1.0))
    solved = None
    if (r_at0[1] > 0.0) != (r_at1[1] > 0.0):
        sign_lo = r_at0[1] > 0.0
        lo, hi = 0.0, 1.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            a1_mid, r_mid = inner(mid)
            if abs(r_mid[0]) <= EQ_TOL and abs(r_mid[1]) <= EQ_TOL:
                solved = (a1_mid, mid, r_mid)
                break
            if (r_mid[1] > 0.0) == sign_lo:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-14:
                break
    if solved is not None:
        a1, a2, (_, _, policy, cal) = solved
        return policy, DualVariables(cal.nu1, cal.nu2, nur, (a1, a2))
    return _boundary_3c_grid_fallback(case_id, residuals, nur)


def _boundary_3c_grid_fallback(case_id, residuals, nur):
    """Coarse 1/64 simplex scan, then local simplex-constrained refinement."""
    from scipy.optimize import minimize

    best = None
    step = 1.0 / 64.0
    for i in range(65):
        a1 = i * step
        for j in range(65 - i):
            a2 = j * step
            r1, r2, policy, cal = residuals(a1, a2, tol_scale=1e3)
            score = max(abs(r1), abs(r2))
            if best is None or score < best[0]:
                best = (score, a1, a2)
    _, a1, a2 = best

    def objective(x):
        u, v = x
        u = min(max(u, 0.0), 1.0)
        v = min(max(v, 0.0), 1.0 - u)
        r1, r2, _, _ = residuals(u, v)
        return max(abs(r1), abs(r2))

    opt = minimize(
        objective,
        np.array([a1, a2]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-9, "maxfev": 400},
    )
    u, v = opt.x
    u = min(max(u, 0.0), 1.0)
    v = min(max(v, 0.0), 1.0 - u)
    r1, r2, policy, cal = residuals(u, v)
    if max(abs(r1), abs(r2)) <= EQ_TOL:
        return policy, DualVariables(cal.nu1, cal.nu2, nur, (u, v))
    raise NotInCaseError(
        f"not-in-case: no multiplier pair satisfies the {case_id} equalities"
    )

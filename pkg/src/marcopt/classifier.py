"""Sequential case classification for the sum-rate optimal policy.

Candidate policies are computed case by case in a fixed order; the first
whose membership conditions hold at its own policy is the optimum.  The
eleven membership sets are mutually disjoint, so the order only fixes
determinism, not correctness.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .ensemble import FadingEnsemble
from .errors import NoConvergenceError, NotInCaseError
from .rates import (
    ChannelConfig,
    PowerPolicy,
    RateSummary,
    achievable_sum_rate,
    corner_rates,
)
from . import solvers
from .solvers import DualVariables

#: strictness threshold separating open-set membership from the boundary
EPS_CASE = 1e-7
#: tolerance for equality-type membership conditions (matches the alpha search)
EPS_EQ = 1e-6


class CaseLabel(enum.Enum):
    C1 = "C1"
    C2 = "C2"
    C3A = "C3a"
    C3B = "C3b"
    C3C = "C3c"
    B1_3A = "B1_3a"
    B2_3A = "B2_3a"
    B1_3B = "B1_3b"
    B2_3B = "B2_3b"
    B1_3C = "B1_3c"
    B2_3C = "B2_3c"

    def __str__(self) -> str:
        return self.value


CASE_ORDER = tuple(CaseLabel)


@dataclass(frozen=True)
class CaseMargin:
    """Signed slack of one defining condition of a membership set.

    Strict inequalities report (rhs - lhs); equalities report -|lhs - rhs|.
    """

    value: float
    equality: bool


@dataclass
class SolveOutcome:
    label: CaseLabel
    policy: PowerPolicy
    duals: DualVariables
    summary: RateSummary
    sum_rate: float
    margins: tuple[CaseMargin, ...]
    diagnostics: dict = field(default_factory=dict)
    degenerate: bool = False


def _condition_slacks(s: RateSummary):
    """The four case-1/case-2 inequality slacks (positive = satisfied)."""
    a1 = s.rmin_relay[0] - s.rmax_dest[0]
    a2 = s.rmin_dest[1] - s.rmax_relay[1]
    b1 = s.rmin_dest[0] - s.rmax_relay[0]
    b2 = s.rmin_relay[1] - s.rmax_dest[1]
    return a1, a2, b1, b2


def evaluate_case_conditions(
    label: CaseLabel, summary: RateSummary
) -> tuple[CaseMargin, ...]:
    """Margins of every defining condition of ``label``'s membership set.

    The case-3 family additionally requires the policy to violate each of
    the case-1 and case-2 condition pairs (strictly or with equality),
    which appears here as a positive max-violation margin.
    """
    a1, a2, b1, b2 = _condition_slacks(summary)
    d = summary.sum_dest - summary.sum_relay
    not_b1 = max(-a1, -a2)
    not_b2 = max(-b1, -b2)
    strict = lambda v: CaseMargin(v, False)
    equal = lambda v: CaseMargin(-abs(v), True)
    if label is CaseLabel.C1:
        return (strict(a1), strict(a2))
    if label is CaseLabel.C2:
        return (strict(b1), strict(b2))
    if label is CaseLabel.C3A:
        return (strict(d), strict(not_b1), strict(not_b2))
    if label is CaseLabel.C3B:
        return (strict(-d), strict(not_b1), strict(not_b2))
    if label is CaseLabel.C3C:
        return (equal(d), strict(not_b1), strict(not_b2))
    if label is CaseLabel.B1_3A:
        return (strict(d), equal(a1), strict(a2))
    if label is CaseLabel.B2_3A:
        return (strict(d), equal(b2), strict(b1))
    if label is CaseLabel.B1_3B:
        return (strict(-d), equal(a2), strict(a1))
    if label is CaseLabel.B2_3B:
        return (strict(-d), equal(b1), strict(b2))
    if label is CaseLabel.B1_3C:
        return (equal(d), equal(a1), equal(a2))
    if label is CaseLabel.B2_3C:
        return (equal(d), equal(b1), equal(b2))
    raise ValueError(f"unknown label {label!r}")


def is_member(margins: tuple[CaseMargin, ...]) -> bool:
    return all(
        (m.value >= -EPS_EQ) if m.equality else (m.value > EPS_CASE) for m in margins
    )


def worst_margin(margins: tuple[CaseMargin, ...]) -> float:
    return min(m.value for m in margins)


_SOLVER_BY_LABEL = {
    CaseLabel.C1: lambda e, c: solvers.solve_case1(e, c),
    CaseLabel.C2: lambda e, c: solvers.solve_case2(e, c),
    CaseLabel.C3A: lambda e, c: solvers.solve_opportunistic("relay", e, c),
    CaseLabel.C3B: lambda e, c: solvers.solve_opportunistic("dest", e, c),
    CaseLabel.C3C: lambda e, c: solvers.solve_equalizer(e, c),
    CaseLabel.B1_3A: lambda e, c: solvers.solve_boundary("1_3a", e, c),
    CaseLabel.B2_3A: lambda e, c: solvers.solve_boundary("2_3a", e, c),
    CaseLabel.B1_3B: lambda e, c: solvers.solve_boundary("1_3b", e, c),
    CaseLabel.B2_3B: lambda e, c: solvers.solve_boundary("2_3b", e, c),
    CaseLabel.B1_3C: lambda e, c: solvers.solve_boundary("1_3c", e, c),
    CaseLabel.B2_3C: lambda e, c: solvers.solve_boundary("2_3c", e, c),
}


def classify_and_solve(e: FadingEnsemble, config: ChannelConfig) -> SolveOutcome:
    """Run the candidate solvers in case order and return the first member.

    Solvers reporting "not-in-case" are skipped.  If no candidate's
    conditions hold (finite ensembles can sit numerically on a set
    boundary) the candidate with the least-negative worst margin is
    returned flagged degenerate.
    """
    diagnostics: dict = {}
    candidates = []
    for label in CASE_ORDER:
        try:
            policy, duals = _SOLVER_BY_LABEL[label](e, config)
        except NotInCaseError as exc:
            diagnostics[label] = str(exc)
            continue
        except NoConvergenceError as exc:
            raise NoConvergenceError(f"{exc} (while testing case {label})") from exc
        summary = corner_rates(policy, e, config)
        margins = evaluate_case_conditions(label, summary)
        diagnostics[label] = margins
        outcome = SolveOutcome(
            label=label,
            policy=policy,
            duals=duals,
            summary=summary,
            sum_rate=achievable_sum_rate(policy, e, config),
            margins=margins,
            diagnostics=diagnostics,
        )
        if is_member(margins):
            return outcome
        candidates.append(outcome)
    if not candidates:
        raise NoConvergenceError("no-convergence: every case solver was inapplicable")
    best = max(candidates, key=lambda o: worst_margin(o.margins))
    best.degenerate = True
    return best

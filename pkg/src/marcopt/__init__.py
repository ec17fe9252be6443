"""Sum-rate optimal power allocation for the two-user orthogonal
multiaccess relay channel with decode-and-forward relaying.

The optimum splits into eleven structural cases (two decoupled
water-filling cases, three opportunistic/equalizing cases, six case
boundaries); `classify_and_solve` walks them in order and returns the
first whose KKT conditions certify the candidate.  `subgradient_solve`
is an independent projected-ascent oracle for cross-checking.
"""

from .classifier import (
    CaseLabel,
    CaseMargin,
    SolveOutcome,
    classify_and_solve,
    evaluate_case_conditions,
)
from .config import ExperimentConfig, load_config
from .ensemble import (
    FadingEnsemble,
    GainState,
    NodeGeometry,
    build_geometry_ensemble,
    load_ensemble,
    validate_ensemble,
)
from .errors import ConfigError, EnsembleError, NoConvergenceError, NotInCaseError
from .oracle import OracleReport, subgradient_solve, sum_rate_objective
from .rates import (
    ChannelConfig,
    PowerPolicy,
    RateSummary,
    achievable_sum_rate,
    corner_rates,
    rate_at_destination,
    rate_at_relay,
    sum_rate_terms,
)
from .solvers import (
    DualVariables,
    WeightedKKTSpec,
    calibrate_duals,
    solve_boundary,
    solve_case1,
    solve_case2,
    solve_equalizer,
    solve_opportunistic,
    waterfill,
)

__version__ = "0.1.0"

__all__ = [
    "CaseLabel",
    "CaseMargin",
    "ChannelConfig",
    "ConfigError",
    "DualVariables",
    "EnsembleError",
    "ExperimentConfig",
    "FadingEnsemble",
    "GainState",
    "NoConvergenceError",
    "NodeGeometry",
    "NotInCaseError",
    "OracleReport",
    "PowerPolicy",
    "RateSummary",
    "SolveOutcome",
    "WeightedKKTSpec",
    "achievable_sum_rate",
    "build_geometry_ensemble",
    "calibrate_duals",
    "classify_and_solve",
    "corner_rates",
    "evaluate_case_conditions",
    "load_config",
    "load_ensemble",
    "rate_at_destination",
    "rate_at_relay",
    "solve_boundary",
    "solve_case1",
    "solve_case2",
    "solve_equalizer",
    "solve_opportunistic",
    "subgradient_solve",
    "sum_rate_objective",
    "sum_rate_terms",
    "validate_ensemble",
    "waterfill",
]

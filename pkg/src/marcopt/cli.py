"""``marc`` command line: solve / sweep / verify experiment configs.

Writes comma-separated result files (UTF-8, LF) with 12-significant-digit
numbers so repeated runs of the same config are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .classifier import SolveOutcome, classify_and_solve
from .config import ExperimentConfig, load_config
from .errors import ConfigError, EnsembleError, NoConvergenceError
from .oracle import subgradient_solve

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_DEGENERATE = 3
EXIT_VERIFY_GAP = 4

OUTCOME_HEADER = (
    "label,sum_rate,nu1,nu2,nu_r,alpha1,alpha2,alpha3,"
    "rmax1_relay,rmax2_relay,rmax1_dest,rmax2_dest,"
    "rmin1_relay,rmin2_relay,rmin1_dest,rmin2_dest,"
    "margin1,margin2,margin3,degenerate"
)
POLICY_HEADER = "state,weight,p1,p2,pr"
SWEEP_HEADER = "value,label,sum_rate,nu1,nu2,nu_r,error"
VERIFY_HEADER = "case_sum_rate,oracle_sum_rate,gap"


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _pad(values, width) -> list[str]:
    out = [_fmt(v) for v in values[:width]]
    out += [""] * (width - len(out))
    return out


def _write_rows(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(r) for r in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _outcome_row(outcome: SolveOutcome) -> list[str]:
    s = outcome.summary
    row = [str(outcome.label), _fmt(outcome.sum_rate)]
    row += [_fmt(outcome.duals.nu1), _fmt(outcome.duals.nu2), _fmt(outcome.duals.nu_r)]
    row += _pad(outcome.duals.alpha, 3)
    row += [_fmt(v) for v in s.rmax_relay + s.rmax_dest + s.rmin_relay + s.rmin_dest]
    row += _pad([m.value for m in outcome.margins], 3)
    row.append("1" if outcome.degenerate else "0")
    return row


def _write_outcome(outcome: SolveOutcome, e, out_dir: Path) -> None:
    _write_rows(out_dir / "outcome.csv", OUTCOME_HEADER, [_outcome_row(outcome)])
    policy_rows = [
        [str(i), _fmt(e.weights[i]), _fmt(outcome.policy.p1[i]),
         _fmt(outcome.policy.p2[i]), _fmt(outcome.policy.pr[i])]
        for i in range(e.n_states)
    ]
    _write_rows(out_dir / "policy.csv", POLICY_HEADER, policy_rows)


def cmd_solve(config: ExperimentConfig, out_dir: Path) -> int:
    e = config.build_ensemble()
    outcome = classify_and_solve(e, config.channel)
    _write_outcome(outcome, e, out_dir)
    return EXIT_DEGENERATE if outcome.degenerate else EXIT_OK


def _sweep_point(config: ExperimentConfig, value: float) -> list[str]:
    point = config.at_sweep_value(value)
    try:
        e = point.build_ensemble()
        outcome = classify_and_solve(e, point.channel)
    except (ConfigError, EnsembleError):
        return [_fmt(value), "", "", "", "", "", str(EXIT_CONFIG)]
    except NoConvergenceError:
        return [_fmt(value), "", "", "", "", "", str(EXIT_NO_CONVERGENCE)]
    err = str(EXIT_DEGENERATE) if outcome.degenerate else ""
    return [
        _fmt(value), str(outcome.label), _fmt(outcome.sum_rate),
        _fmt(outcome.duals.nu1), _fmt(outcome.duals.nu2),
        _fmt(outcome.duals.nu_r), err,
    ]


def cmd_sweep(config: ExperimentConfig, out_dir: Path) -> int:
    if config.sweep is None:
        raise ConfigError("sweep: missing required field 'sweep'")
    values = config.sweep.values()
    workers = max(1, int(os.environ.get("MARC_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _sweep_point(config, v), values))
    else:
        rows = [_sweep_point(config, v) for v in values]
    _write_rows(out_dir / "sweep.csv", SWEEP_HEADER, rows)
    return EXIT_OK


def cmd_verify(config: ExperimentConfig, out_dir: Path, oracle_iters=None) -> int:
    e = config.build_ensemble()
    outcome = classify_and_solve(e, config.channel)
    iterations = oracle_iters if oracle_iters is not None else config.oracle.iterations
    report = subgradient_solve(e, config.channel, iterations=iterations)
    gap = outcome.sum_rate - report.objective
    _write_rows(
        out_dir / "verify.csv",
        VERIFY_HEADER,
        [[_fmt(outcome.sum_rate), _fmt(report.objective), _fmt(gap)]],
    )
    return EXIT_OK if abs(gap) <= config.oracle.tolerance else EXIT_VERIFY_GAP


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marc",
        description="Sum-rate optimal power allocation for the two-user "
        "orthogonal multiaccess relay channel.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "classify and solve one configuration"),
        ("sweep", "solve along a one-parameter sweep"),
        ("verify", "cross-check the case solution against the ascent oracle"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", type=Path, help="experiment config (JSON)")
        p.add_argument(
            "--out-dir", type=Path, default=Path("."), help="output directory"
        )
        p.add_argument(
            "--oracle-iters",
            type=int,
            default=None,
            help="override the oracle iteration count (verify only)",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out_dir = args.out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "solve":
            return cmd_solve(config, out_dir)
        if args.command == "sweep":
            return cmd_sweep(config, out_dir)
        if args.oracle_iters is not None and args.oracle_iters < 1:
            raise ConfigError("--oracle-iters: expected a positive integer")
        return cmd_verify(config, out_dir, args.oracle_iters)
    except (ConfigError, EnsembleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())

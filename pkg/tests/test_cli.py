"""Command line interface: exit codes, output schemas, determinism."""

import dataclasses
import json

import pytest

import marcopt as m
from marcopt.classifier import CASE_ORDER
from marcopt import cli
from marcopt.cli import (
    EXIT_CONFIG,
    EXIT_DEGENERATE,
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    EXIT_VERIFY_GAP,
    OUTCOME_HEADER,
    POLICY_HEADER,
    SWEEP_HEADER,
    VERIFY_HEADER,
)

CONFIG = {
    "channel": {"theta": 0.5, "p1_bar": 1.0, "p2_bar": 1.0, "pr_bar": 2.5},
    "ensemble": {
        "geometry": {
            "source1": [0.45, 0.2],
            "source2": [0.55, 0.22],
            "relay": [0.5, 0.0],
            "destination": [1.2, 0.0],
            "path_loss_exponent": 3.0,
        },
        "n_states": 6,
        "seed": 7,
    },
}


def _config_path(tmp_path, raw=None, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw if raw is not None else CONFIG), encoding="utf-8")
    return path


def _run(tmp_path, command, raw=None, extra=()):
    cfg = _config_path(tmp_path, raw)
    out = tmp_path / "out"
    code = cli.main([command, str(cfg), "--out-dir", str(out), *extra])
    return code, out


def test_solve_writes_outcome_and_policy(tmp_path):
    code, out = _run(tmp_path, "solve")
    assert code == EXIT_OK
    outcome_lines = (out / "outcome.csv").read_text(encoding="utf-8").splitlines()
    assert outcome_lines[0] == OUTCOME_HEADER
    assert len(outcome_lines) == 2
    fields = outcome_lines[1].split(",")
    assert len(fields) == len(OUTCOME_HEADER.split(","))
    assert fields[0] in [str(l) for l in CASE_ORDER]
    assert float(fields[1]) > 0.0
    assert fields[-1] in ("0", "1")
    policy_lines = (out / "policy.csv").read_text(encoding="utf-8").splitlines()
    assert policy_lines[0] == POLICY_HEADER
    assert len(policy_lines) == 1 + CONFIG["ensemble"]["n_states"]
    for i, line in enumerate(policy_lines[1:]):
        fields = line.split(",")
        assert fields[0] == str(i)
        assert all(float(v) >= 0.0 for v in fields[1:])


def test_solve_is_byte_deterministic(tmp_path):
    cfg = _config_path(tmp_path)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert cli.main(["solve", str(cfg), "--out-dir", str(out_a)]) == EXIT_OK
    assert cli.main(["solve", str(cfg), "--out-dir", str(out_b)]) == EXIT_OK
    for name in ("outcome.csv", "policy.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_bad_config_exits_with_config_code(tmp_path, capsys):
    bad = dict(CONFIG, extra=1)
    code, _ = _run(tmp_path, "solve", raw=bad)
    assert code == EXIT_CONFIG
    assert "unknown field" in capsys.readouterr().err


def test_missing_config_file_exits_with_config_code(tmp_path, capsys):
    code = cli.main(["solve", str(tmp_path / "absent.json")])
    assert code == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_verify_within_tolerance(tmp_path):
    raw = dict(CONFIG, oracle={"iterations": 20_000, "tolerance": 1e-3})
    code, out = _run(tmp_path, "verify", raw=raw)
    assert code == EXIT_OK
    lines = (out / "verify.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == VERIFY_HEADER
    case_rate, oracle_rate, gap = (float(v) for v in lines[1].split(","))
    assert gap == pytest.approx(case_rate - oracle_rate, abs=1e-12)
    assert abs(gap) <= 1e-3


def test_verify_reports_gap_when_oracle_is_underconverged(tmp_path):
    raw = dict(CONFIG, oracle={"iterations": 20_000, "tolerance": 1e-9})
    code, out = _run(tmp_path, "verify", raw=raw, extra=("--oracle-iters", "5"))
    assert code == EXIT_VERIFY_GAP
    lines = (out / "verify.csv").read_text(encoding="utf-8").splitlines()
    assert abs(float(lines[1].split(",")[2])) > 1e-9


def test_verify_rejects_nonpositive_iteration_override(tmp_path, capsys):
    code, _ = _run(tmp_path, "verify", extra=("--oracle-iters", "0"))
    assert code == EXIT_CONFIG
    assert "--oracle-iters" in capsys.readouterr().err


def test_sweep_writes_one_row_per_value(tmp_path):
    raw = dict(
        CONFIG, sweep={"parameter": "pr_bar", "start": 0.5, "stop": 2.0, "step": 0.5}
    )
    code, out = _run(tmp_path, "sweep", raw=raw)
    assert code == EXIT_OK
    lines = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == SWEEP_HEADER
    assert len(lines) == 5
    for line in lines[1:]:
        fields = line.split(",")
        assert fields[1] in [str(l) for l in CASE_ORDER]
        assert float(fields[2]) > 0.0
        assert fields[6] == ""


def test_sweep_without_sweep_section_is_config_error(tmp_path, capsys):
    code, _ = _run(tmp_path, "sweep")
    assert code == EXIT_CONFIG
    assert "sweep" in capsys.readouterr().err


def test_sweep_threaded_output_matches_serial(tmp_path, monkeypatch):
    raw = dict(
        CONFIG, sweep={"parameter": "pr_bar", "start": 0.5, "stop": 2.0, "step": 0.5}
    )
    cfg = _config_path(tmp_path, raw)
    out_serial = tmp_path / "serial"
    out_thread = tmp_path / "thread"
    monkeypatch.setenv("MARC_THREADS", "1")
    assert cli.main(["sweep", str(cfg), "--out-dir", str(out_serial)]) == EXIT_OK
    monkeypatch.setenv("MARC_THREADS", "2")
    assert cli.main(["sweep", str(cfg), "--out-dir", str(out_thread)]) == EXIT_OK
    assert (out_serial / "sweep.csv").read_bytes() == (
        out_thread / "sweep.csv"
    ).read_bytes()


def test_no_convergence_exit_code(tmp_path, monkeypatch, capsys):
    def stuck(e, channel):
        raise m.NoConvergenceError("no-convergence: synthetic")

    monkeypatch.setattr(cli, "classify_and_solve", stuck)
    code, _ = _run(tmp_path, "solve")
    assert code == EXIT_NO_CONVERGENCE
    assert "no-convergence" in capsys.readouterr().err


def test_degenerate_outcome_exit_code(tmp_path, monkeypatch):
    real = cli.classify_and_solve

    def degenerate(e, channel):
        return dataclasses.replace(real(e, channel), degenerate=True)

    monkeypatch.setattr(cli, "classify_and_solve", degenerate)
    code, out = _run(tmp_path, "solve")
    assert code == EXIT_DEGENERATE
    line = (out / "outcome.csv").read_text(encoding="utf-8").splitlines()[1]
    assert line.split(",")[-1] == "1"


def test_sweep_rows_record_per_point_failures(tmp_path, monkeypatch):
    raw = dict(
        CONFIG, sweep={"parameter": "pr_bar", "start": 0.5, "stop": 1.5, "step": 0.5}
    )
    real = cli.classify_and_solve

    def flaky(e, channel):
        if channel.pr_bar == 1.0:
            raise m.NoConvergenceError("no-convergence: synthetic")
        return real(e, channel)

    monkeypatch.setattr(cli, "classify_and_solve", flaky)
    code, out = _run(tmp_path, "sweep", raw=raw)
    assert code == EXIT_OK
    lines = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
    errors = [line.split(",")[6] for line in lines[1:]]
    assert errors == ["", str(EXIT_NO_CONVERGENCE), ""]

"""Experiment configuration: JSON schema, validation, and sweep expansion."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .ensemble import (
    FadingEnsemble,
    NodeGeometry,
    build_geometry_ensemble,
    load_ensemble,
)
from .errors import ConfigError
from .rates import ChannelConfig

SWEEP_PARAMETERS = ("p1_bar", "p2_bar", "pr_bar", "theta", "relay_x", "relay_y")

THETA_CLAMP = 1e-3


@dataclass(frozen=True)
class GeometrySource:
    geometry: NodeGeometry
    n_states: int
    seed: int


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    step: float

    def values(self) -> list[float]:
        if self.stop == self.start:
            vals = [self.start]
        else:
            vals = []
            v = self.start
            k = 0
            while v <= self.stop + 1e-12 * max(abs(self.stop), 1.0):
                vals.append(v)
                k += 1
                v = self.start + k * self.step
        if self.parameter == "theta":
            vals = [min(max(v, THETA_CLAMP), 1.0 - THETA_CLAMP) for v in vals]
        return vals


@dataclass(frozen=True)
class OracleSettings:
    iterations: int = 20_000
    tolerance: float = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelConfig
    geometry_source: Optional[GeometrySource]
    ensemble_path: Optional[Path]
    sweep: Optional[SweepSpec]
    oracle: OracleSettings

    def build_ensemble(self) -> FadingEnsemble:
        if self.geometry_source is not None:
            gs = self.geometry_source
            return build_geometry_ensemble(gs.geometry, gs.n_states, gs.seed)
        return load_ensemble(self.ensemble_path)

    def at_sweep_value(self, value: float) -> "ExperimentConfig":
        """Config with the sweep parameter replaced by ``value`` (sweep cleared)."""
        param = self.sweep.parameter
        if param in ("p1_bar", "p2_bar", "pr_bar", "theta"):
            channel = replace(self.channel, **{param: value})
            return replace(self, channel=channel, sweep=None)
        if param in ("relay_x", "relay_y"):
            if self.geometry_source is None:
                raise ConfigError(
                    "sweep: relay position sweeps require a geometry ensemble source"
                )
            geo = self.geometry_source.geometry
            x, y = geo.relay
            relay = (value, y) if param == "relay_x" else (x, value)
            gs = replace(self.geometry_source, geometry=replace(geo, relay=relay))
            return replace(self, geometry_source=gs, sweep=None)
        raise ConfigError(f"sweep: unknown parameter {param!r}")


def _require(mapping: dict, key: str, ctx: str):
    if key not in mapping:
        raise ConfigError(f"{ctx}: missing required field '{key}'")
    return mapping[key]


def _reject_unknown(mapping: dict, allowed: set, ctx: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{ctx}: unknown field(s) {sorted(unknown)}")


def _number(value, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{ctx}: expected a number, got {value!r}")
    return float(value)


def _point(value, ctx: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{ctx}: expected an [x, y] pair")
    return (_number(value[0], ctx), _number(value[1], ctx))


def _parse_channel(raw, ctx="channel") -> ChannelConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{ctx}: expected an object")
    _reject_unknown(raw, {"theta", "p1_bar", "p2_bar", "pr_bar"}, ctx)
    try:
        return ChannelConfig(
            theta=_number(_require(raw, "theta", ctx), f"{ctx}.theta"),
            p1_bar=_number(_require(raw, "p1_bar", ctx), f"{ctx}.p1_bar"),
            p2_bar=_number(_require(raw, "p2_bar", ctx), f"{ctx}.p2_bar"),
            pr_bar=_number(_require(raw, "pr_bar", ctx), f"{ctx}.pr_bar"),
        )
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc


def _parse_ensemble(raw, base_dir: Path):
    ctx = "ensemble"
    if not isinstance(raw, dict):
        raise ConfigError(f"{ctx}: expected an object")
    has_geometry = "geometry" in raw
    has_path = "path" in raw
    if has_geometry == has_path:
        raise ConfigError(
            f"{ctx}: exactly one ensemble source required ('geometry' or 'path')"
        )
    if has_path:
        _reject_unknown(raw, {"path"}, ctx)
        path = base_dir / str(raw["path"])
        return None, path
    _reject_unknown(raw, {"geometry", "n_states", "seed"}, ctx)
    geo_raw = raw["geometry"]
    if not isinstance(geo_raw, dict):
        raise ConfigError(f"{ctx}.geometry: expected an object")
    _reject_unknown(
        geo_raw,
        {"source1", "source2", "relay", "destination", "path_loss_exponent"},
        f"{ctx}.geometry",
    )
    geometry = NodeGeometry(
        source1=_point(_require(geo_raw, "source1", f"{ctx}.geometry"), "source1"),
        source2=_point(_require(geo_raw, "source2", f"{ctx}.geometry"), "source2"),
        relay=_point(_require(geo_raw, "relay", f"{ctx}.geometry"), "relay"),
        destination=_point(
            _require(geo_raw, "destination", f"{ctx}.geometry"), "destination"
        ),
        path_loss_exponent=_number(
            _require(geo_raw, "path_loss_exponent", f"{ctx}.geometry"),
            f"{ctx}.geometry.path_loss_exponent",
        ),
    )
    n_states = _require(raw, "n_states", ctx)
    if not isinstance(n_states, int) or isinstance(n_states, bool) or n_states < 1:
        raise ConfigError(f"{ctx}.n_states: expected a positive integer")
    seed = _require(raw, "seed", ctx)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"{ctx}.seed: expected an integer")
    return GeometrySource(geometry, n_states, seed), None


def _parse_sweep(raw) -> SweepSpec:
    ctx = "sweep"
    if not isinstance(raw, dict):
        raise ConfigError(f"{ctx}: expected an object")
    _reject_unknown(raw, {"parameter", "start", "stop", "step"}, ctx)
    parameter = _require(raw, "parameter", ctx)
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(
            f"{ctx}.parameter: must be one of {SWEEP_PARAMETERS}, got {parameter!r}"
        )
    start = _number(_require(raw, "start", ctx), f"{ctx}.start")
    stop = _number(_require(raw, "stop", ctx), f"{ctx}.stop")
    step = _number(_require(raw, "step", ctx), f"{ctx}.step")
    if step <= 0:
        raise ConfigError(f"{ctx}.step: must be > 0")
    if stop < start:
        raise ConfigError(f"{ctx}: stop must be >= start")
    return SweepSpec(parameter, start, stop, step)


def _parse_oracle(raw) -> OracleSettings:
    ctx = "oracle"
    if not isinstance(raw, dict):
        raise ConfigError(f"{ctx}: expected an object")
    _reject_unknown(raw, {"iterations", "tolerance"}, ctx)
    settings = OracleSettings()
    if "iterations" in raw:
        it = raw["iterations"]
        if not isinstance(it, int) or isinstance(it, bool) or it < 1:
            raise ConfigError(f"{ctx}.iterations: expected a positive integer")
        settings = OracleSettings(iterations=it, tolerance=settings.tolerance)
    if "tolerance" in raw:
        tol = _number(raw["tolerance"], f"{ctx}.tolerance")
        if tol <= 0:
            raise ConfigError(f"{ctx}.tolerance: must be > 0")
        settings = OracleSettings(iterations=settings.iterations, tolerance=tol)
    return settings


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config JSON file.

    Unknown keys are rejected; error messages name the offending field.
    Relative ensemble paths are resolved against the config file's
    directory.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root: expected an object")
    _reject_unknown(raw, {"channel", "ensemble", "sweep", "oracle"}, "config root")
    channel = _parse_channel(_require(raw, "channel", "config root"))
    geometry_source, ensemble_path = _parse_ensemble(
        _require(raw, "ensemble", "config root"), path.parent
    )
    sweep = _parse_sweep(raw["sweep"]) if "sweep" in raw else None
    oracle = _parse_oracle(raw["oracle"]) if "oracle" in raw else OracleSettings()
    return ExperimentConfig(
        channel=channel,
        geometry_source=geometry_source,
        ensemble_path=ensemble_path,
        sweep=sweep,
        oracle=oracle,
    )

"""Finite weighted fading ensembles and geometry-driven Rayleigh sampling.

An ensemble is a finite list of channel-gain states with probabilities; all
ergodic averages downstream are weighted sums over its states.  Gains are
squared channel magnitudes normalized to unit noise power, so only |h|^2 is
ever stored.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EnsembleError

GAIN_FIELDS = ("g_r1", "g_r2", "g_d1", "g_d2", "g_dr")
CSV_HEADER = ("weight",) + GAIN_FIELDS

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class GainState:
    """Squared channel gains for one fading realization.

    ``g_r1``/``g_r2`` are source-to-relay gains, ``g_d1``/``g_d2``
    source-to-destination, ``g_dr`` relay-to-destination.
    """

    g_r1: float
    g_r2: float
    g_d1: float
    g_d2: float
    g_dr: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.g_r1, self.g_r2, self.g_d1, self.g_d2, self.g_dr)


class FadingEnsemble:
    """Ordered list of gain states with per-state probabilities.

    Gains are held column-wise as numpy arrays for fast weighted averaging;
    ``states`` materializes the row view on demand.
    """

    def __init__(self, states: Iterable[GainState], weights: Sequence[float]):
        gains = np.array([s.as_tuple() for s in states], dtype=np.float64)
        if gains.ndim != 2:
            gains = gains.reshape(-1, 5)
        weights = np.asarray(weights, dtype=np.float64)
        if gains.shape[0] != weights.shape[0]:
            raise EnsembleError(
                "states/weights length mismatch: "
                f"{gains.shape[0]} states vs {weights.shape[0]} weights"
            )
        self._gains = gains
        self._weights = weights

    @classmethod
    def from_arrays(cls, gains: np.ndarray, weights: np.ndarray) -> "FadingEnsemble":
        obj = cls.__new__(cls)
        gains = np.asarray(gains, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        if gains.ndim != 2 or gains.shape[1] != 5:
            raise EnsembleError("gain array must have shape (n_states, 5)")
        if gains.shape[0] != weights.shape[0]:
            raise EnsembleError("states/weights length mismatch")
        obj._gains = gains
        obj._weights = weights
        return obj

    @property
    def n_states(self) -> int:
        return self._gains.shape[0]

    def __len__(self) -> int:
        return self.n_states

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def gains(self) -> np.ndarray:
        """All gains as an (n_states, 5) array in GAIN_FIELDS order."""
        return self._gains

    @property
    def g_r1(self) -> np.ndarray:
        return self._gains[:, 0]

    @property
    def g_r2(self) -> np.ndarray:
        return self._gains[:, 1]

    @property
    def g_d1(self) -> np.ndarray:
        return self._gains[:, 2]

    @property
    def g_d2(self) -> np.ndarray:
        return self._gains[:, 3]

    @property
    def g_dr(self) -> np.ndarray:
        return self._gains[:, 4]

    @property
    def states(self) -> tuple[GainState, ...]:
        return tuple(GainState(*row) for row in self._gains)

    def source_gains(self, receiver: str) -> np.ndarray:
        """(n_states, 2) gains of sources 1 and 2 at ``receiver`` ('relay'|'dest')."""
        if receiver == "relay":
            return self._gains[:, 0:2]
        if receiver == "dest":
            return self._gains[:, 2:4]
        raise ValueError(f"unknown receiver {receiver!r}")


@dataclass(frozen=True)
class NodeGeometry:
    """Planar node positions and a path-loss exponent.

    Mean squared gain of a link at distance d is d**(-path_loss_exponent).
    """

    source1: tuple[float, float]
    source2: tuple[float, float]
    relay: tuple[float, float]
    destination: tuple[float, float]
    path_loss_exponent: float

    def link_distances(self) -> dict[str, float]:
        """Transmitter-receiver distances keyed by gain field."""

        def dist(a, b):
            return math.hypot(a[0] - b[0], a[1] - b[1])

        return {
            "g_r1": dist(self.source1, self.relay),
            "g_r2": dist(self.source2, self.relay),
            "g_d1": dist(self.source1, self.destination),
            "g_d2": dist(self.source2, self.destination),
            "g_dr": dist(self.relay, self.destination),
        }

    def link_means(self) -> dict[str, float]:
        """Mean squared gains d**(-gamma) per link."""
        if self.path_loss_exponent < 0:
            raise EnsembleError("degenerate geometry: negative path-loss exponent")
        means = {}
        for field, d in self.link_distances().items():
            if d <= 0.0:
                raise EnsembleError(f"degenerate geometry: zero distance on {field}")
            means[field] = d ** (-self.path_loss_exponent)
        return means


def build_geometry_ensemble(
    geometry: NodeGeometry, n_states: int, seed: int
) -> FadingEnsemble:
    """Sample ``n_states`` equal-weight states with Rayleigh-faded links.

    Each squared gain is exponential with mean d**(-gamma) for its link;
    the draw order is fixed (one column at a time) so identical inputs
    give bit-identical ensembles.
    """
    if n_states < 1:
        raise EnsembleError("n_states must be >= 1")
    means = geometry.link_means()
    rng = np.random.default_rng(seed)
    gains = np.empty((n_states, 5), dtype=np.float64)
    for j, field in enumerate(GAIN_FIELDS):
        gains[:, j] = rng.exponential(means[field], size=n_states)
    weights = np.full(n_states, 1.0 / n_states)
    return validate_ensemble(FadingEnsemble.from_arrays(gains, weights))


def validate_ensemble(e: FadingEnsemble) -> FadingEnsemble:
    """Check all ensemble invariants; renormalize weights if nearly exact.

    Idempotent on accepted inputs.  Raises :class:`EnsembleError` with a
    distinct message per violation.
    """
    if e.n_states == 0:
        raise EnsembleError("empty ensemble")
    if not np.all(np.isfinite(e.gains)):
        raise EnsembleError("non-finite gain")
    if np.any(e.gains < 0):
        raise EnsembleError("negative gain")
    if not np.all(np.isfinite(e.weights)):
        raise EnsembleError("non-finite weight")
    if np.any(e.weights < 0):
        raise EnsembleError("negative weight")
    total = float(np.sum(e.weights))
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise EnsembleError(
            f"weight-sum violation: weights sum to {total!r}, expected 1"
        )
    if total != 1.0:
        return FadingEnsemble.from_arrays(e.gains, e.weights / total)
    return e


def load_ensemble(path) -> FadingEnsemble:
    """Load a validated ensemble from a CSV file.

    Schema: header ``weight,g_r1,g_r2,g_d1,g_d2,g_dr``, one state per row,
    states kept in file order.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EnsembleError("empty ensemble") from None
        if [h.strip() for h in header] != list(CSV_HEADER):
            raise EnsembleError(
                "parse failure: expected header " + ",".join(CSV_HEADER)
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(CSV_HEADER):
                raise EnsembleError(
                    f"parse failure: wrong arity on line {lineno} "
                    f"({len(row)} fields, expected {len(CSV_HEADER)})"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise EnsembleError(
                    f"parse failure: non-numeric value on line {lineno}"
                ) from None
    if not rows:
        raise EnsembleError("empty ensemble")
    data = np.asarray(rows, dtype=np.float64)
    return validate_ensemble(FadingEnsemble.from_arrays(data[:, 1:6], data[:, 0]))

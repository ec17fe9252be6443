"""Decode-and-forward rate functionals over a fading ensemble.

The sources transmit on a fraction ``theta`` of the band, the half-duplex
relay on the remaining ``1 - theta``.  All rates are ergodic averages in
bits per channel use (base-2 logs); the relay decodes both users, so every
destination-side bound carries the relay-to-destination bonus term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .ensemble import FadingEnsemble

LN2 = float(np.log(2.0))

# Order of the four sum-rate bounds in `sum_rate_terms`: joint relay bound,
# joint destination bound, and the two cross corner-point sums.
SUM_RATE_TERM_NAMES = (
    "relay sum",
    "dest sum",
    "corner 1r+2d",
    "corner 1d+2r",
)


@dataclass(frozen=True)
class ChannelConfig:
    """Bandwidth split and average power budgets."""

    theta: float
    p1_bar: float
    p2_bar: float
    pr_bar: float

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ValueError(f"theta must lie in (0,1), got {self.theta}")
        for name in ("p1_bar", "p2_bar", "pr_bar"):
            v = getattr(self, name)
            if not (v >= 0.0) or not np.isfinite(v):
                raise ValueError(f"{name} must be a finite nonnegative power, got {v}")

    def budget(self, k: str) -> float:
        return {"1": self.p1_bar, "2": self.p2_bar, "r": self.pr_bar}[k]


class PowerPolicy:
    """Per-state transmit powers for source 1, source 2, and the relay."""

    def __init__(self, p1, p2, pr):
        self.p1 = np.asarray(p1, dtype=np.float64)
        self.p2 = np.asarray(p2, dtype=np.float64)
        self.pr = np.asarray(pr, dtype=np.float64)
        if not (self.p1.shape == self.p2.shape == self.pr.shape):
            raise ValueError("power vectors must share one length")
        if self.p1.ndim != 1:
            raise ValueError("power vectors must be one-dimensional")

    @classmethod
    def zeros(cls, n_states: int) -> "PowerPolicy":
        z = np.zeros(n_states)
        return cls(z, z.copy(), z.copy())

    def __len__(self) -> int:
        return self.p1.shape[0]

    def average_powers(self, e: FadingEnsemble) -> tuple[float, float, float]:
        w = e.weights
        return (
            float(w @ self.p1),
            float(w @ self.p2),
            float(w @ self.pr),
        )

    def budget_residuals(
        self, e: FadingEnsemble, config: ChannelConfig
    ) -> tuple[float, float, float]:
        """Weighted average power minus budget, per transmitter."""
        e1, e2, er = self.average_powers(e)
        return (e1 - config.p1_bar, e2 - config.p2_bar, er - config.pr_bar)

    def is_feasible(self, e: FadingEnsemble, config: ChannelConfig) -> bool:
        if np.any(self.p1 < 0) or np.any(self.p2 < 0) or np.any(self.pr < 0):
            return False
        res = self.budget_residuals(e, config)
        budgets = (config.p1_bar, config.p2_bar, config.pr_bar)
        return all(r <= 1e-9 * max(b, 1.0) for r, b in zip(res, budgets))


@dataclass(frozen=True)
class RateSummary:
    """Corner rates and both joint sum-rate bounds, in bits per channel use.

    ``rmax_*[k]`` is user k+1's rate when decoded last at that receiver,
    ``rmin_*[k]`` when decoded first; rmin is derived from the identity
    rmin_k = sum - rmax_j.
    """

    rmax_relay: tuple[float, float]
    rmax_dest: tuple[float, float]
    rmin_relay: tuple[float, float]
    rmin_dest: tuple[float, float]
    sum_relay: float
    sum_dest: float

    def rmax(self, user: int, receiver: str) -> float:
        vals = self.rmax_relay if receiver == "relay" else self.rmax_dest
        return vals[user - 1]

    def rmin(self, user: int, receiver: str) -> float:
        vals = self.rmin_relay if receiver == "relay" else self.rmin_dest
        return vals[user - 1]


def _check_alignment(policy: PowerPolicy, e: FadingEnsemble):
    if len(policy) != e.n_states:
        raise ValueError(
            f"policy/ensemble length mismatch: {len(policy)} vs {e.n_states}"
        )


def _user_set(users: Iterable[int]) -> tuple[int, ...]:
    s = tuple(sorted(set(users)))
    if not s or any(u not in (1, 2) for u in s):
        raise ValueError(f"users must be a nonempty subset of {{1,2}}, got {users!r}")
    return s


def relay_bonus(policy: PowerPolicy, e: FadingEnsemble, theta: float) -> float:
    """Relay-to-destination term (1-theta) E[log2(1 + g_dr Pr / (1-theta))]."""
    tb = 1.0 - theta
    terms = np.log2(1.0 + e.g_dr * policy.pr / tb)
    return tb * float(e.weights @ terms)


def rate_at_relay(
    users: Iterable[int], policy: PowerPolicy, e: FadingEnsemble, theta: float
) -> float:
    """theta * E[log2(1 + sum_{k in users} g_rk Pk / theta)]."""
    _check_alignment(policy, e)
    s = _user_set(users)
    x = np.zeros(e.n_states)
    if 1 in s:
        x += e.g_r1 * policy.p1
    if 2 in s:
        x += e.g_r2 * policy.p2
    return theta * float(e.weights @ np.log2(1.0 + x / theta))


def rate_at_destination(
    users: Iterable[int], policy: PowerPolicy, e: FadingEnsemble, theta: float
) -> float:
    """Destination MAC term plus the relay bonus (included for every user set)."""
    _check_alignment(policy, e)
    s = _user_set(users)
    x = np.zeros(e.n_states)
    if 1 in s:
        x += e.g_d1 * policy.p1
    if 2 in s:
        x += e.g_d2 * policy.p2
    mac = theta * float(e.weights @ np.log2(1.0 + x / theta))
    return mac + relay_bonus(policy, e, theta)


def corner_rates(
    policy: PowerPolicy, e: FadingEnsemble, config: ChannelConfig
) -> RateSummary:
    th = config.theta
    rmax_relay = (
        rate_at_relay((1,), policy, e, th),
        rate_at_relay((2,), policy, e, th),
    )
    rmax_dest = (
        rate_at_destination((1,), policy, e, th),
        rate_at_destination((2,), policy, e, th),
    )
    sum_relay = rate_at_relay((1, 2), policy, e, th)
    sum_dest = rate_at_destination((1, 2), policy, e, th)
    rmin_relay = (sum_relay - rmax_relay[1], sum_relay - rmax_relay[0])
    rmin_dest = (sum_dest - rmax_dest[1], sum_dest - rmax_dest[0])
    return RateSummary(
        rmax_relay=rmax_relay,
        rmax_dest=rmax_dest,
        rmin_relay=rmin_relay,
        rmin_dest=rmin_dest,
        sum_relay=sum_relay,
        sum_dest=sum_dest,
    )


def sum_rate_terms(summary: RateSummary) -> tuple[float, float, float, float]:
    """The four upper bounds whose minimum is the achievable sum rate."""
    return (
        summary.sum_relay,
        summary.sum_dest,
        summary.rmax_relay[0] + summary.rmax_dest[1],
        summary.rmax_dest[0] + summary.rmax_relay[1],
    )


def achievable_sum_rate(
    policy: PowerPolicy, e: FadingEnsemble, config: ChannelConfig
) -> float:
    """Maximum R1+R2 over the intersection of the relay and destination regions."""
    return min(sum_rate_terms(corner_rates(policy, e, config)))

"""Upstream arrivals and the point queue that stores vehicles waiting to enter the zone.

Noise comes from numpy's PCG64 bit generator (a documented, platform-stable
algorithm) through an explicit Box-Muller transform: each normal draw
consumes exactly two uniforms and nothing is cached, so a seed fixes the
whole arrival sequence bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvariantViolation

QUEUE_TOL = 1e-12


class NormalStream:
    """Standard normal draws from PCG64 uniforms via Box-Muller (cosine branch only)."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def draw(self) -> float:
        u1, u2 = self._gen.random(2)
        return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)

    def draws(self, n: int) -> np.ndarray:
        # Same uniform consumption order as n calls to draw().
        u = self._gen.random((n, 2))
        return np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])


@dataclass(frozen=True)
class ConstantArrival:
    value: float  # veh/s

    def __post_init__(self):
        if not self.value >= 0:
            raise ConfigError(f"demand.value: must be non-negative, got {self.value!r}")


@dataclass(frozen=True)
class TrapezoidArrival:
    """r(t) = max(0, peak * min(1, a t, 1 - a (t - plateau_end)) + noise).

    The plateau starts at ``1 / ramp_rate`` and ends at ``plateau_end``;
    ``noise_std`` is the standard deviation of one Gaussian draw per step.
    """

    peak: float
    ramp_rate: float = 0.0005
    plateau_end: float = 4000.0
    horizon: float = 8000.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.peak >= 0:
            raise ConfigError(f"demand.peak: must be non-negative, got {self.peak!r}")
        if not self.ramp_rate > 0:
            raise ConfigError(f"demand.ramp_rate: must be positive, got {self.ramp_rate!r}")
        if not self.noise_std >= 0:
            raise ConfigError(f"demand.noise_std: must be non-negative, got {self.noise_std!r}")
        if self.plateau_end < 1.0 / self.ramp_rate:
            raise ConfigError("demand.plateau_end: must not precede the end of the ramp (1/ramp_rate)")

    @property
    def plateau(self) -> tuple[float, float]:
        return 1.0 / self.ramp_rate, self.plateau_end

    def mean(self, t):
        a = self.ramp_rate
        return self.peak * np.minimum(np.minimum(1.0, a * t), 1.0 - a * (t - self.plateau_end))

    def rng(self) -> NormalStream:
        return NormalStream(self.seed)


ArrivalPattern = ConstantArrival | TrapezoidArrival


def arrival_rate(pattern: ArrivalPattern, t: float, rng: NormalStream | None = None) -> float:
    """Arrival rate at time ``t``; draws one noise sample from ``rng`` when noisy."""
    if isinstance(pattern, ConstantArrival):
        return pattern.value
    base = float(pattern.mean(t))
    if pattern.noise_std > 0:
        if rng is None:
            raise ValueError("a noisy arrival pattern needs a NormalStream")
        base += pattern.noise_std * rng.draw()
    return max(0.0, base)


def arrival_series(pattern: ArrivalPattern, times: np.ndarray) -> np.ndarray:
    """Arrival rates for every step time; same draws as sequential :func:`arrival_rate` calls, equal to round-off."""
    times = np.asarray(times, dtype=float)
    if isinstance(pattern, ConstantArrival):
        return np.full(times.shape, pattern.value)
    r = pattern.mean(times)
    if pattern.noise_std > 0:
        r = r + pattern.noise_std * pattern.rng().draws(times.size)
    return np.maximum(0.0, r)


@dataclass(frozen=True)
class QueueState:
    lam: float  # stored vehicles, veh (a numpy array for batched runs)

    def __post_init__(self):
        if np.min(self.lam) < -QUEUE_TOL:
            raise InvariantViolation(f"queue size went negative: {self.lam!r}")


def queue_demand(q: QueueState, r: float, dt: float, cap: float) -> float:
    """Demand the queue presents to the zone: min(cap, lam / dt + r)."""
    if isinstance(q.lam, float):
        return min(cap, q.lam / dt + r)
    return np.minimum(cap, q.lam / dt + r)


def queue_step(q: QueueState, r: float, f: float, dt: float) -> QueueState:
    lam = q.lam + dt * (r - f)
    if isinstance(lam, float):
        if lam < -QUEUE_TOL:
            raise InvariantViolation(f"queue size went negative ({lam!r}): in-flux exceeded issued demand")
        # Sub-tolerance negatives are round-off from f == lam / dt + r.
        return QueueState(max(lam, 0.0) if lam < 0 else lam)
    if lam.min() < -QUEUE_TOL:
        raise InvariantViolation(f"queue size went negative ({lam.min()!r}): in-flux exceeded issued demand")
    return QueueState(np.maximum(lam, 0.0))

"""Triangular fundamental diagram and the boundary flux laws of a lane-drop zone.

All quantities are SI: metres, seconds, veh/m, veh/s. Every function accepts
either Python floats or numpy arrays (evaluated elementwise), so the same
code drives single scenarios and batched property checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError, DomainError

# Slack allowed on density bounds before a value is treated as out of range.
DENSITY_TOL = 1e-12


@dataclass(frozen=True)
class FundamentalDiagram:
    """Triangular flow-density relation Q(rho) = min(v_f rho, w (k_j - rho))."""

    v_f: float  # free-flow speed, m/s
    w: float  # congested wave speed, m/s
    k_j: float  # jam density, veh/m

    def __post_init__(self):
        for name in ("v_f", "w", "k_j"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"fd.{name}: must be a positive finite number, got {value!r}")

    @property
    def k_c(self) -> float:
        """Critical density, where the diagram peaks."""
        return self.w * self.k_j / (self.v_f + self.w)

    @property
    def capacity(self) -> float:
        return self.v_f * self.k_c


@dataclass(frozen=True)
class Bottleneck:
    C: float  # downstream capacity, veh/s
    delta: float  # capacity-drop magnitude, 0 <= delta < 1

    def __post_init__(self):
        if not np.isfinite(self.C) or self.C <= 0:
            raise ConfigError(f"bottleneck.C: must be positive, got {self.C!r}")
        if not 0 <= self.delta < 1:
            raise ConfigError(f"bottleneck.delta: must lie in [0, 1), got {self.delta!r}")

    @property
    def dropped_capacity(self) -> float:
        return (1.0 - self.delta) * self.C


@dataclass(frozen=True)
class DerivedConstants:
    """Bottleneck constants computed once from the diagram and the drop model.

    ``k_1`` is the density at which free flow saturates the bottleneck,
    ``k_2`` the congested density whose supply equals the dropped capacity,
    ``v_1``/``v_2`` the speed limits whose inflow caps equal ``C`` and
    ``(1 - delta) C``, and ``k_3`` the slope of the inflow cap in ``u`` at
    ``v_1``.
    """

    fd: FundamentalDiagram
    bottleneck: Bottleneck
    k_c: float
    k_1: float
    k_2: float
    v_1: float
    v_2: float
    k_3: float

    # Short aliases used throughout the numerical code.
    @property
    def v_f(self) -> float:
        return self.fd.v_f

    @property
    def w(self) -> float:
        return self.fd.w

    @property
    def k_j(self) -> float:
        return self.fd.k_j

    @property
    def C(self) -> float:
        return self.bottleneck.C

    @property
    def delta(self) -> float:
        return self.bottleneck.delta


def derive_constants(fd: FundamentalDiagram, bottleneck: Bottleneck) -> DerivedConstants:
    C = bottleneck.C
    if C >= fd.capacity:
        raise ConfigError(
            f"bottleneck.C: must be below the road capacity v_f*k_c = {fd.capacity:.6g}, got {C!r}"
        )
    C2 = bottleneck.dropped_capacity
    w, k_j = fd.w, fd.k_j
    v_1 = C * w / (k_j * w - C)
    return DerivedConstants(
        fd=fd,
        bottleneck=bottleneck,
        k_c=fd.k_c,
        k_1=C / fd.v_f,
        k_2=k_j - C2 / w,
        v_1=v_1,
        v_2=C2 * w / (k_j * w - C2),
        k_3=w * w * k_j / (v_1 + w) ** 2,
    )


def reference_parameters(delta: float = 0.2) -> tuple[FundamentalDiagram, Bottleneck]:
    """Reference two-to-one lane drop: v_f=30, w=35/8, k_j=2/7, C=6/11."""
    fd = FundamentalDiagram(v_f=30.0, w=float(Fraction(35, 8)), k_j=float(Fraction(2, 7)))
    return fd, Bottleneck(C=float(Fraction(6, 11)), delta=delta)


def reference_constants(delta: float = 0.2) -> DerivedConstants:
    return derive_constants(*reference_parameters(delta))


def check_density(fd: FundamentalDiagram, rho, name: str = "rho"):
    """Raise DomainError if ``rho`` leaves [0, k_j] by more than DENSITY_TOL."""
    if isinstance(rho, float) and -DENSITY_TOL <= rho <= fd.k_j + DENSITY_TOL:
        return
    arr = np.asarray(rho, dtype=float)
    # NaN fails both comparisons and is rejected too.
    if arr.size and arr.min() >= -DENSITY_TOL and arr.max() <= fd.k_j + DENSITY_TOL:
        return
    if arr.size:
        raise DomainError(f"{name}: density outside [0, k_j={fd.k_j:.6g}]: {arr.ravel()[:5]}")


def flow(fd: FundamentalDiagram, rho):
    check_density(fd, rho)
    return np.minimum(fd.v_f * rho, fd.w * (fd.k_j - rho))


def demand(fd: FundamentalDiagram, rho):
    check_density(fd, rho)
    return np.minimum(fd.capacity, fd.v_f * rho)


def supply(fd: FundamentalDiagram, rho):
    check_density(fd, rho)
    return np.minimum(fd.capacity, fd.w * (fd.k_j - rho))


def vsl_cap(fd: FundamentalDiagram, u):
    """Largest inflow admitted by a posted speed limit ``u``."""
    return u / (u + fd.w) * fd.w * fd.k_j


def speed_for_flow(fd: FundamentalDiagram, q):
    """Inverse of :func:`vsl_cap`: the speed limit whose cap equals ``q``."""
    return q * fd.w / (fd.k_j * fd.w - q)


def discharge_flux(dc: DerivedConstants, k_obs):
    """Out-flux with capacity drop: v_f k below k_1 (inclusive), (1 - delta) C above."""
    check_density(dc.fd, k_obs, "k_obs")
    return _discharge(dc, k_obs)


def inflow_flux(dc: DerivedConstants, d_minus, u, k_up):
    """In-flux limited by upstream demand, the speed-limit cap and the zone supply."""
    check_density(dc.fd, k_up, "k_up")
    check_speed(dc, u)
    if np.any(np.asarray(d_minus) < 0):
        raise DomainError(f"d_minus: upstream demand must be non-negative: {d_minus!r}")
    return _inflow(dc, d_minus, u, k_up)


def check_speed(dc: DerivedConstants, u):
    if isinstance(u, float) and 0 <= u <= dc.v_f:
        return
    u_arr = np.asarray(u, dtype=float)
    if not (u_arr.min() >= 0 and u_arr.max() <= dc.v_f):
        raise DomainError(f"u: speed limit outside [0, v_f={dc.v_f}]: {u!r}")


# Unchecked kernels for the plants, whose states are validated on construction.

def _discharge(dc: DerivedConstants, k):
    if isinstance(k, float):
        return dc.bottleneck.dropped_capacity if k > dc.k_1 else dc.v_f * k
    return np.where(k > dc.k_1, dc.bottleneck.dropped_capacity, dc.v_f * k)[()]


def _inflow(dc: DerivedConstants, d_minus, u, k_up):
    if isinstance(k_up, float) and isinstance(u, float) and isinstance(d_minus, float):
        w = dc.w
        return min(d_minus, u / (u + w) * w * dc.k_j, w * (dc.k_j - k_up))
    return np.minimum(np.minimum(d_minus, vsl_cap(dc.fd, u)), dc.w * (dc.k_j - k_up))

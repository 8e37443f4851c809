"""Link queue plant: one average density for the whole zone, advanced by forward Euler."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .flow_core import DerivedConstants, _discharge, _inflow, check_density, check_speed


@dataclass(frozen=True)
class LinkState:
    k: float  # zone density, veh/m (a numpy array for batched runs)
    l_0: float  # zone length, m

    def __post_init__(self):
        if not self.l_0 > 0:
            raise ConfigError(f"l_0: zone length must be positive, got {self.l_0!r}")

    @property
    def vehicles(self):
        return self.l_0 * self.k


def rhs(dc: DerivedConstants, state: LinkState, u, d_minus):
    """Return ``(dk_dt, f, g)`` for the current density, speed limit and demand."""
    check_density(dc.fd, state.k, "k")
    check_speed(dc, u)
    f = _inflow(dc, d_minus, u, state.k)
    g = _discharge(dc, state.k)
    return (f - g) / state.l_0, f, g


@dataclass
class StepInfo:
    f: float
    g: float
    clamped: int = 0


def step(dc: DerivedConstants, state: LinkState, u, d_minus, dt: float) -> tuple[LinkState, StepInfo]:
    """One Euler step. Returns the new state and the fluxes that produced it.

    The density is clamped to [0, k_j] as a safety net; ``StepInfo.clamped``
    counts how many entries needed it. Conservation ``l_0 (k' - k) = dt (f - g)``
    holds exactly whenever no clamp fires.
    """
    if not dt > 0:
        raise ConfigError(f"dt: must be positive, got {dt!r}")
    dk_dt, f, g = rhs(dc, state, u, d_minus)
    k_new = state.k + dt * dk_dt
    if isinstance(k_new, float):
        clamped = int(not 0.0 <= k_new <= dc.k_j)
        if clamped:
            k_new = min(max(k_new, 0.0), dc.k_j)
    else:
        clamped = int(np.count_nonzero((k_new < 0) | (k_new > dc.k_j)))
        if clamped:
            k_new = np.clip(k_new, 0.0, dc.k_j)
    return LinkState(k_new, state.l_0), StepInfo(f, g, clamped)

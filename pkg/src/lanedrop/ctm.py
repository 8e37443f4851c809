"""Cell Transmission Model of the zone with the same boundary flux laws as the link queue.

Interior fluxes are the Godunov (demand/supply) fluxes; the upstream boundary
uses the speed-limited inflow on the first cell and the downstream boundary
the capacity-drop discharge on the last cell. All ``n + 1`` fluxes are built
from the old state before any cell is updated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .flow_core import (
    DerivedConstants,
    FundamentalDiagram,
    _discharge,
    _inflow,
    check_density,
    check_speed,
)


@dataclass(frozen=True)
class CellState:
    rho: np.ndarray  # cell densities, veh/m, shape (..., n)
    dx: float  # cell length, m

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.ndim == 0 or rho.shape[-1] < 1:
            raise ConfigError("rho: need at least one cell")
        if not self.dx > 0:
            raise ConfigError(f"dx: cell length must be positive, got {self.dx!r}")
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.rho.shape[-1]

    @property
    def length(self) -> float:
        return self.n * self.dx

    @property
    def vehicles(self):
        return self.dx * self.rho.sum(axis=-1)[()]


def check_cfl(fd: FundamentalDiagram, dx: float, dt: float) -> float:
    """Return the CFL number v_f dt / dx, raising ConfigError if it exceeds 1."""
    cfl = fd.v_f * dt / dx
    if cfl > 1 + 1e-12:
        raise ConfigError(f"plant: CFL number v_f*dt/dx = {cfl:.6g} exceeds 1")
    return cfl


def interior_flux(dc: DerivedConstants, rho_left, rho_right):
    check_density(dc.fd, rho_left, "rho_left")
    check_density(dc.fd, rho_right, "rho_right")
    return _interior(dc, rho_left, rho_right)


def _interior(dc, rho_left, rho_right):
    cap = dc.fd.capacity
    return np.minimum(np.minimum(cap, dc.v_f * rho_left), np.minimum(cap, dc.w * (dc.k_j - rho_right)))


def fluxes(dc: DerivedConstants, rho: np.ndarray, u, d_minus) -> np.ndarray:
    """All cell-boundary fluxes ``q[..., 0..n]`` for the state ``rho``."""
    q = np.empty(rho.shape[:-1] + (rho.shape[-1] + 1,))
    q[..., 0] = _inflow(dc, d_minus, u, rho[..., 0])
    cap = dc.fd.capacity
    send = np.minimum(dc.v_f * rho[..., :-1], cap)
    recv = np.minimum(dc.w * (dc.k_j - rho[..., 1:]), cap)
    np.minimum(send, recv, out=q[..., 1:-1])
    q[..., -1] = _discharge(dc, rho[..., -1])
    return q


@dataclass
class StepInfo:
    f: float
    g: float
    clamped: int = 0


def step(dc: DerivedConstants, state: CellState, u, d_minus, dt: float) -> tuple[CellState, StepInfo]:
    check_cfl(dc.fd, state.dx, dt)
    _check_bounds(dc, state.rho)
    check_speed(dc, u)
    q = fluxes(dc, state.rho, u, d_minus)
    rho = state.rho + (dt / state.dx) * (q[..., :-1] - q[..., 1:])
    # Under CFL <= 1 the scheme is bound preserving; only round-off may stray.
    clamped = _check_bounds(dc, rho, "rho (after update)")
    if clamped:
        rho = np.clip(rho, 0.0, dc.k_j)
    return CellState(rho, state.dx), StepInfo(q[..., 0][()], q[..., -1][()], clamped)


def _check_bounds(dc: DerivedConstants, rho: np.ndarray, name: str = "rho") -> int:
    """Density bound check; returns how many entries sit inside the round-off slack."""
    lo, hi = rho.min(), rho.max()
    if lo >= 0.0 and hi <= dc.k_j:
        return 0
    check_density(dc.fd, rho, name)
    return int(np.count_nonzero((rho < 0) | (rho > dc.k_j)))


def observe(state: CellState, sensor_cell: int | None = None):
    """Return ``(rho_first, rho_sensor)``; the sensor defaults to the last cell.

    ``sensor_cell`` is 1-based to match the usual cell numbering.
    """
    idx = state.n - 1 if sensor_cell is None else sensor_cell - 1
    if not 0 <= idx < state.n:
        raise ConfigError(f"sensor_cell: must be in 1..{state.n}, got {sensor_cell}")
    return state.rho[..., 0][()], state.rho[..., idx][()]


def uniform(n: int, dx: float, rho: float = 0.0) -> CellState:
    return CellState(np.full(n, float(rho)), dx)


"""Equilibria and stability of the link queue plant, open and closed loop.

Everything here is closed form except :func:`classify_limit_behavior`, which
integrates the linearised switched system and inspects its late window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ConfigError
from .flow_core import DerivedConstants, _discharge, _inflow, speed_for_flow, vsl_cap

Regime = Literal["uncongested", "congested"]

# Basin labels: which initial densities k(0) lead to the equilibrium.
ANY = "any k(0)"
BELOW_K1 = "k(0) <= k_1"
ABOVE_K1 = "k(0) > k_1"


@dataclass(frozen=True)
class Equilibrium:
    k_star: float
    u_star: float
    g_star: float
    regime: Regime
    basin_note: str = ANY

    def attracts(self, k0: float, dc: DerivedConstants) -> bool:
        if self.basin_note.startswith(BELOW_K1):
            return k0 <= dc.k_1
        if self.basin_note.startswith(ABOVE_K1):
            return k0 > dc.k_1
        return True


def flux_residual(dc: DerivedConstants, eq: Equilibrium, d_minus: float) -> float:
    """|F(u*, k*) - G(k*)| for the link queue fluxes."""
    f = _inflow(dc, float(d_minus), float(eq.u_star), float(eq.k_star))
    return abs(f - _discharge(dc, float(eq.k_star)))


def open_loop_equilibria(dc: DerivedConstants, d_minus: float, u_star: float) -> list[Equilibrium]:
    """All equilibria of the link queue under constant demand and a constant speed limit.

    With ``m = min(d_minus, cap(u_star))`` the zone settles uncongested at
    ``m / v_f`` whenever ``m <= C`` and congested at ``k_2`` whenever
    ``m >= (1 - delta) C``. When both exist the initial density decides:
    ``k(0) <= k_1`` leads to the uncongested one. The uncongested state is
    listed first.
    """
    if not 0 <= u_star <= dc.v_f:
        raise ConfigError(f"u_star: must lie in [0, v_f], got {u_star!r}")
    if d_minus < 0:
        raise ConfigError(f"d_minus: must be non-negative, got {d_minus!r}")
    C, C2 = dc.C, dc.bottleneck.dropped_capacity
    m = min(d_minus, float(vsl_cap(dc.fd, u_star)))
    out = []
    free = m <= C
    jammed = m >= C2
    if free:
        out.append(Equilibrium(m / dc.v_f, u_star, m, "uncongested", BELOW_K1 if jammed else ANY))
    if jammed:
        note = ABOVE_K1 if free else ANY
        if m == C2:
            note += " (every k in (k_1, k_2] is stationary)"
        out.append(Equilibrium(dc.k_2, u_star, C2, "congested", note))
    return out


@dataclass(frozen=True)
class OptimalSpeed:
    g_star: float
    u_star: float | None  # the unique optimum, when there is one
    u_threshold: float  # every u >= this is optimal when u_star is None
    requires_uncongested_start: bool  # optimum only reached from k(0) <= k_1
    note: str = ""


def optimal_speed_limit(dc: DerivedConstants, d_minus: float) -> OptimalSpeed:
    C, C2 = dc.C, dc.bottleneck.dropped_capacity
    g_star = min(C, d_minus)
    caveat = d_minus > C2
    if d_minus > C:
        return OptimalSpeed(g_star, dc.v_1, dc.v_1, caveat, "u* = v_1 exactly")
    thr = float(speed_for_flow(dc.fd, d_minus))
    return OptimalSpeed(g_star, None, thr, caveat, "any u* >= threshold")


@dataclass(frozen=True)
class Stability:
    kind: str
    rate: float | None = None  # exponential decay rate, 1/s
    escape_threshold: float | None = None  # density beyond which the state is lost


def classify_stability(dc: DerivedConstants, eq: Equilibrium, d_minus: float, l_0: float) -> Stability:
    """Local stability of an open-loop equilibrium returned by :func:`open_loop_equilibria`."""
    C2 = dc.bottleneck.dropped_capacity
    m = min(d_minus, float(vsl_cap(dc.fd, eq.u_star)))
    if eq.regime == "congested":
        if m == C2:
            # Inflow pinned at the dropped capacity: decay only from above k_2.
            return Stability("marginally_stable", dc.w / l_0)
        return Stability("exp_stable", dc.w / l_0)
    if eq.k_star >= dc.k_1:
        if dc.delta == 0:
            return Stability("marginally_stable", dc.v_f / l_0)
        return Stability("saddle_unstable_positive_side", dc.v_f / l_0, dc.k_1)
    if m > C2:
        return Stability("exp_stable_with_escape_threshold", dc.v_f / l_0, dc.k_1)
    return Stability("exp_stable", dc.v_f / l_0)


def closed_loop_equilibria(dc: DerivedConstants, d_minus: float, alpha: float, beta: float) -> list[Equilibrium]:
    """Equilibria of the link queue under the feedback u = v_1 + alpha e + beta int(e), e = k_1 - k.

    Any ``beta > 0`` leaves a single uncongested state. A pure P controller
    (``beta == 0``) keeps one congested state too whenever the demand reaches
    the dropped capacity: at ``u* = v_2`` if alpha exceeds
    ``(v_1 - v_2) / (k_2 - k_1)``, otherwise at ``k_2``.
    """
    if alpha < 0 or beta < 0:
        raise ConfigError("alpha/beta: gains must be non-negative")
    if alpha == 0 and beta == 0:
        raise ConfigError("alpha/beta: both zero is the open-loop system; use open_loop_equilibria")
    C, C2 = dc.C, dc.bottleneck.dropped_capacity
    if d_minus >= C:
        out = [Equilibrium(dc.k_1, dc.v_1, C, "uncongested")]
    elif beta > 0:
        out = [Equilibrium(d_minus / dc.v_f, dc.v_f, d_minus, "uncongested")]
    else:
        k = d_minus / dc.v_f
        out = [Equilibrium(k, min(dc.v_f, dc.v_1 + alpha * (dc.k_1 - k)), d_minus, "uncongested")]
    if beta > 0 or d_minus < C2:
        return out
    threshold = p_gain_threshold(dc)
    if alpha > threshold:
        jam = Equilibrium(dc.k_1 + (dc.v_1 - dc.v_2) / alpha, dc.v_2, C2, "congested")
    elif alpha < threshold:
        jam = Equilibrium(dc.k_2, dc.v_1 - alpha * (dc.k_2 - dc.k_1), C2, "congested")
    else:
        jam = Equilibrium(dc.k_2, dc.v_2, C2, "congested")
    out[0] = Equilibrium(out[0].k_star, out[0].u_star, out[0].g_star, out[0].regime, BELOW_K1)
    return out + [Equilibrium(jam.k_star, jam.u_star, jam.g_star, jam.regime, ABOVE_K1)]


def p_gain_threshold(dc: DerivedConstants) -> float:
    """Proportional gain separating the two congested P-control equilibria."""
    return (dc.v_1 - dc.v_2) / (dc.k_2 - dc.k_1)


def closed_loop_rhs(dc: DerivedConstants, l_0: float, alpha: float, beta: float, d_minus, k, u, k_bar=None):
    """Right-hand side (dk/dt, du/dt) of the link queue under continuous PI control."""
    k_bar = dc.k_1 if k_bar is None else k_bar
    dk = (_inflow(dc, d_minus, u, k) - _discharge(dc, k)) / l_0
    return dk, -alpha * dk + beta * (k_bar - k)


@dataclass(frozen=True)
class SwitchedSystem:
    """Linearisation of the closed loop around (k_1, v_1) in z = k - k_1, eps = u - v_1.

    ``A_neg`` governs ``z <= 0``; ``A_pos`` and the offset ``b_pos`` govern
    ``z > 0``, where the bottleneck discharges at the dropped capacity.
    """

    A_neg: np.ndarray
    A_pos: np.ndarray
    b_pos: np.ndarray
    k_1: float
    v_f: float
    C: float
    delta: float

    def rhs(self, x: np.ndarray) -> np.ndarray:
        if x[0] <= 0:
            return self.A_neg @ x
        return self.A_pos @ x + self.b_pos

    def discharge(self, z):
        """Bottleneck out-flux of the linearised model for density offset ``z``."""
        return np.where(z > 0, (1 - self.delta) * self.C, self.C + self.v_f * z)


def build_switched_system(dc: DerivedConstants, l_0: float, alpha: float, beta: float) -> SwitchedSystem:
    v_f, k_3, CD = dc.v_f, dc.k_3, dc.C * dc.delta
    A_neg = np.array([[-v_f / l_0, k_3 / l_0], [alpha * v_f / l_0 - beta, -alpha * k_3 / l_0]])
    A_pos = np.array([[0.0, k_3 / l_0], [-beta, -alpha * k_3 / l_0]])
    b_pos = np.array([CD / l_0, -alpha * CD / l_0])
    return SwitchedSystem(A_neg, A_pos, b_pos, dc.k_1, v_f, dc.C, dc.delta)


@dataclass(frozen=True)
class LimitBehavior:
    kind: Literal["converges_to_origin", "limit_cycle"]
    amplitude: float  # max |z| in the late window
    period: float | None = None
    mean_g_deficit: float = 0.0  # C minus mean discharge over the late window
    z: np.ndarray = field(default=None, repr=False)


def simulate_switched(sys: SwitchedSystem, z0: float, eps0: float, horizon: float = 8000.0, dt: float = 1.0):
    n = int(round(horizon / dt))
    xs = np.empty((n + 1, 2))
    xs[0] = (z0, eps0)
    for j in range(n):
        xs[j + 1] = xs[j] + dt * sys.rhs(xs[j])
    return xs


def classify_limit_behavior(
    sys: SwitchedSystem,
    z0: float,
    eps0: float,
    horizon: float = 8000.0,
    dt: float = 1.0,
    window_frac: float = 0.25,
) -> LimitBehavior:
    """Integrate the switched system and label its late-window behaviour.

    Converged means max |z| over the final ``window_frac`` of the horizon is
    below ``1e-6 k_1``; otherwise the period is the mean spacing of the local
    maxima of ``z`` in that window.
    """
    xs = simulate_switched(sys, z0, eps0, horizon, dt)
    z = xs[:, 0]
    late = z[-max(1, int(round(window_frac * (len(z) - 1)))):]
    amp = float(np.abs(late).max())
    deficit = float(sys.C - sys.discharge(late).mean())
    if amp < 1e-6 * sys.k_1:
        return LimitBehavior("converges_to_origin", amp, None, deficit, z)
    inner = late[1:-1]
    peaks = np.flatnonzero((inner > late[:-2]) & (inner >= late[2:])) + 1
    period = float(np.diff(peaks).mean() * dt) if len(peaks) >= 2 else None
    return LimitBehavior("limit_cycle", amp, period, deficit, z)

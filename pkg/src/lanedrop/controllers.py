"""Speed-limit policies: none, constant, and incremental I/PI feedback on density.

The feedback law is the velocity form

    u <- clamp(u - alpha (k_new - k_prev) + beta (k_bar - k_prev) dt, u_min, v_f)

which is the Euler discretisation of du/dt = -alpha dk/dt + beta (k_bar - k).
The integral lives in ``u`` itself, so clamping doubles as anti-windup.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError
from .flow_core import DerivedConstants

Kind = Literal["none", "constant", "pi"]


@dataclass(frozen=True)
class ControllerConfig:
    kind: Kind = "none"
    u_const: float | None = None
    alpha: float = 0.0  # (m/s) per (veh/m)
    beta: float = 0.0  # (m/s) per (veh/m s)
    u_min: float = 0.5
    xi: float = 0.0  # relative error in the target density

    def __post_init__(self):
        if self.kind not in ("none", "constant", "pi"):
            raise ConfigError(f"controller.kind: unknown kind {self.kind!r}")
        if self.u_min < 0:
            raise ConfigError(f"controller.u_min: must be non-negative, got {self.u_min!r}")
        if self.kind == "pi":
            if self.alpha < 0 or self.beta < 0:
                raise ConfigError("controller.alpha/beta: gains must be non-negative")
            if self.alpha + self.beta <= 0:
                raise ConfigError("controller.alpha/beta: at least one gain must be positive")
        if self.kind == "constant" and self.u_const is None:
            raise ConfigError("controller.u_const: required for a constant controller")

    @classmethod
    def pi(cls, alpha: float = 0.0, beta: float = 0.0, u_min: float = 0.5, xi: float = 0.0):
        return cls("pi", alpha=alpha, beta=beta, u_min=u_min, xi=xi)

    @classmethod
    def constant(cls, u: float, u_min: float = 0.5):
        return cls("constant", u_const=u, u_min=u_min)

    def target_density(self, dc: DerivedConstants) -> float:
        return (1.0 + self.xi) * dc.k_1


@dataclass(frozen=True)
class ControllerState:
    u: float  # posted speed limit, m/s
    k_prev: float  # last observed density, veh/m


def init(cfg: ControllerConfig, dc: DerivedConstants, k_initial_obs: float) -> ControllerState:
    if not cfg.u_min < dc.v_2:
        raise ConfigError(f"controller.u_min: must be below v_2 = {dc.v_2:.6g}, got {cfg.u_min!r}")
    if cfg.kind == "constant":
        if not cfg.u_min <= cfg.u_const <= dc.v_f:
            raise ConfigError(
                f"controller.u_const: must lie in [u_min, v_f] = [{cfg.u_min}, {dc.v_f}], got {cfg.u_const!r}"
            )
        return ControllerState(float(cfg.u_const), k_initial_obs)
    return ControllerState(dc.v_f, k_initial_obs)


def increment(cfg: ControllerConfig, dc: DerivedConstants, k_prev: float, k_new: float, dt: float) -> float:
    """Unclamped change in the speed limit over one step."""
    return -cfg.alpha * (k_new - k_prev) + cfg.beta * (cfg.target_density(dc) - k_prev) * dt


def update(
    cfg: ControllerConfig, dc: DerivedConstants, state: ControllerState, k_obs_new: float, dt: float
) -> ControllerState:
    if not dt > 0:
        raise ConfigError(f"dt: must be positive, got {dt!r}")
    if cfg.kind != "pi":
        return state
    u = state.u + increment(cfg, dc, state.k_prev, k_obs_new, dt)
    if isinstance(u, float):
        return ControllerState(min(max(u, cfg.u_min), dc.v_f), k_obs_new)
    return ControllerState(np.clip(u, cfg.u_min, dc.v_f), k_obs_new)

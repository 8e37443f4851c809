"""Scenario orchestration: arrivals -> point queue -> plant -> controller, one step at a time.

Per step ``j`` (``dt`` seconds starting at ``t_j``):

1. draw the arrival rate ``r_j``;
2. the point queue issues the upstream demand ``d_j`` (or a fixed demand is used);
3. the plant advances with the current speed limit ``u_j``, giving ``f_j`` and ``g_j``;
4. the queue absorbs ``r_j - f_j``;
5. the controller reads the new sensor density and sets ``u_{j+1}``.

Row ``j`` of a trace describes that step: densities, queue and speed limit
at ``t_j`` together with the fluxes applied during it.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from . import controllers, ctm, link_queue
from .controllers import ControllerConfig
from .demand import (
    ConstantArrival,
    QueueState,
    TrapezoidArrival,
    arrival_series,
    queue_demand,
    queue_step,
)
from .errors import ConfigError, InvariantViolation
from .flow_core import Bottleneck, DerivedConstants, FundamentalDiagram, check_density, derive_constants

CONSERVATION_TOL = 1e-9
TRAVEL_TIME_FORMULA = "area_between_cumulative_arrivals_and_departures_over_departed"


@dataclass(frozen=True)
class DirectDemand:
    """Upstream demand fed straight to the zone, bypassing the point queue."""

    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise ConfigError(f"demand.value: must be non-negative, got {self.value!r}")


@dataclass(frozen=True)
class PlantConfig:
    kind: Literal["link_queue", "ctm"] = "link_queue"
    n: int = 20
    dx: float = 30.0
    sensor_cell: int | None = None  # 1-based; None means the last cell

    def __post_init__(self):
        if self.kind not in ("link_queue", "ctm"):
            raise ConfigError(f"plant.kind: unknown plant {self.kind!r}")
        if self.kind == "ctm" and (self.n < 1 or not self.dx > 0):
            raise ConfigError("plant.n/dx: need n >= 1 cells of positive length")


@dataclass(frozen=True)
class ScenarioConfig:
    fd: FundamentalDiagram
    bottleneck: Bottleneck
    controller: ControllerConfig = ControllerConfig()
    demand: DirectDemand | ConstantArrival | TrapezoidArrival = DirectDemand(0.0)
    plant: PlantConfig = PlantConfig()
    l_0: float = 600.0
    dt: float = 1.0
    horizon: float = 8000.0
    initial: float | tuple = 0.0  # zone density, or per-cell densities for the CTM
    window_frac: float = 0.25
    name: str = "scenario"

    def __post_init__(self):
        if not self.l_0 > 0:
            raise ConfigError(f"l_0: must be positive, got {self.l_0!r}")
        if not self.dt > 0:
            raise ConfigError(f"dt: must be positive, got {self.dt!r}")
        steps = self.horizon / self.dt
        if not self.horizon > 0 or abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError(f"horizon: must be a positive multiple of dt, got {self.horizon!r}")
        if not 0 < self.window_frac <= 1:
            raise ConfigError(f"window_frac: must lie in (0, 1], got {self.window_frac!r}")
        if self.plant.kind == "ctm":
            ctm.check_cfl(self.fd, self.plant.dx, self.dt)
            if abs(self.plant.n * self.plant.dx - self.l_0) > 1e-9 * self.l_0:
                raise ConfigError(f"plant: n*dx = {self.plant.n * self.plant.dx} must equal l_0 = {self.l_0}")
            if self.plant.sensor_cell is not None and not 1 <= self.plant.sensor_cell <= self.plant.n:
                raise ConfigError(f"plant.sensor_cell: must be in 1..{self.plant.n}")
            if np.ndim(self.initial) and len(self.initial) != self.plant.n:
                raise ConfigError(f"initial: expected {self.plant.n} cell densities")
        elif np.ndim(self.initial):
            raise ConfigError("initial: the link queue takes a single density")
        try:
            check_density(self.fd, self.initial, "initial")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def constants(self) -> DerivedConstants:
        return derive_constants(self.fd, self.bottleneck)

    @property
    def seed(self) -> int | None:
        return getattr(self.demand, "seed", None)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        if not isinstance(self.demand, TrapezoidArrival):
            return self
        return replace(self, demand=replace(self.demand, seed=seed))

    def with_controller(self, controller: ControllerConfig) -> "ScenarioConfig":
        return replace(self, controller=controller)

    def with_delta(self, delta: float) -> "ScenarioConfig":
        return replace(self, bottleneck=replace(self.bottleneck, delta=delta))


@dataclass
class ScenarioTrace:
    config: ScenarioConfig
    t: np.ndarray
    k_obs: np.ndarray
    u: np.ndarray
    f: np.ndarray
    g: np.ndarray
    lam: np.ndarray
    d_minus: np.ndarray
    r: np.ndarray
    drop: np.ndarray  # discharge was at the dropped capacity during the step
    rho: np.ndarray | None = None  # (steps, n) density field for the CTM
    final_density: float | np.ndarray = 0.0
    final_queue: float = 0.0
    final_u: float = 0.0
    clamp_events: int = 0
    max_conservation_error: float = 0.0

    COLUMNS = ("t", "k_obs", "u", "f", "g", "lambda", "d_minus", "r")

    @property
    def steps(self) -> int:
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        return self.lam if name == "lambda" else getattr(self, name)


class _Kahan:
    """Compensated running sum; keeps the conservation residual at round-off level."""

    __slots__ = ("total", "_c")

    def __init__(self):
        self.total = 0.0
        self._c = 0.0

    def add(self, x: float):
        y = x - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


def _stored(config: ScenarioConfig, density) -> float:
    if config.plant.kind == "ctm":
        return config.plant.dx * float(np.sum(density))
    return config.l_0 * float(density)


def run(config: ScenarioConfig) -> ScenarioTrace:
    dc = config.constants
    dt, n_steps = config.dt, config.steps
    times = np.arange(n_steps) * dt

    if isinstance(config.demand, DirectDemand):
        r_all = np.full(n_steps, config.demand.value)
        direct = True
    else:
        r_all = arrival_series(config.demand, times)
        direct = False

    is_ctm = config.plant.kind == "ctm"
    if is_ctm:
        init = np.broadcast_to(np.asarray(config.initial, dtype=float), (config.plant.n,)).copy()
        plant = ctm.CellState(init, config.plant.dx)
        sensor = lambda s: ctm.observe(s, config.plant.sensor_cell)[1]  # noqa: E731
        discharge_density = lambda s: s.rho[-1]  # noqa: E731
        step = ctm.step
        rho_rec = np.empty((n_steps, config.plant.n))
    else:
        plant = link_queue.LinkState(float(config.initial), config.l_0)
        sensor = discharge_density = lambda s: s.k  # noqa: E731
        step = link_queue.step
        rho_rec = None

    rec = {name: np.empty(n_steps) for name in ("k_obs", "u", "f", "g", "lam", "d_minus")}
    drop = np.empty(n_steps, dtype=bool)

    queue = QueueState(0.0)
    k_obs = float(sensor(plant))
    ctrl = controllers.init(config.controller, dc, k_obs)
    cap = dc.fd.capacity
    stored0 = _stored(config, plant.rho if is_ctm else plant.k)
    arrived, departed = _Kahan(), _Kahan()
    clamps = 0
    worst = 0.0

    for j in range(n_steps):
        r = float(r_all[j])
        d = r if direct else queue_demand(queue, r, dt, cap)
        rec["k_obs"][j] = k_obs
        rec["u"][j] = ctrl.u
        rec["lam"][j] = queue.lam
        rec["d_minus"][j] = d
        drop[j] = discharge_density(plant) > dc.k_1
        if is_ctm:
            rho_rec[j] = plant.rho

        plant, info = step(dc, plant, ctrl.u, d, dt)
        rec["f"][j] = info.f
        rec["g"][j] = info.g
        clamps += info.clamped
        queue = QueueState(queue.lam + dt * (r - info.f)) if direct else queue_step(queue, r, info.f, dt)

        k_obs = float(sensor(plant))
        ctrl = controllers.update(config.controller, dc, ctrl, k_obs, dt)

        arrived.add(dt * r)
        departed.add(dt * info.g)
        held = queue.lam + _stored(config, plant.rho if is_ctm else plant.k) - stored0
        err = abs((arrived.total - departed.total) - held)
        worst = max(worst, err)
        # Float state itself rounds at ~1e-16 of its size; widen the bound for large backlogs.
        # A clamp removes or adds mass by design, so the check stops being meaningful after one.
        if err > CONSERVATION_TOL * max(1.0, arrived.total / 1e4) and clamps == 0:
            raise InvariantViolation(f"vehicle conservation off by {err:.3e}", step=j)
        if not config.controller.u_min - 1e-12 <= ctrl.u <= dc.v_f + 1e-12 and config.controller.kind == "pi":
            raise InvariantViolation(f"speed limit {ctrl.u} left [u_min, v_f]", step=j)

    return ScenarioTrace(
        config=config,
        t=times,
        k_obs=rec["k_obs"],
        u=rec["u"],
        f=rec["f"],
        g=rec["g"],
        lam=rec["lam"],
        d_minus=rec["d_minus"],
        r=r_all,
        drop=drop,
        rho=rho_rec,
        final_density=plant.rho.copy() if is_ctm else plant.k,
        final_queue=queue.lam,
        final_u=ctrl.u,
        clamp_events=clamps,
        max_conservation_error=worst,
    )


@dataclass(frozen=True)
class Summary:
    total_arrivals: float
    total_departures: float
    avg_travel_time: float | None  # None when nobody departed
    late_mean_g: float
    late_g_min: float
    late_g_max: float
    late_mean_k_obs: float
    late_drop_steps: int
    drop_steps: int
    clamp_events: int
    max_conservation_error: float
    final_queue: float
    window_frac: float
    travel_time_formula: str = TRAVEL_TIME_FORMULA

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def late_window(trace: ScenarioTrace, window_frac: float | None = None) -> slice:
    frac = trace.config.window_frac if window_frac is None else window_frac
    n = max(1, int(round(frac * trace.steps)))
    return slice(trace.steps - n, trace.steps)


def travel_time(trace: ScenarioTrace) -> float | None:
    """Area between cumulative arrival and departure curves divided by vehicles departed."""
    dt = trace.config.dt
    A = np.cumsum(trace.r) * dt
    D = np.cumsum(trace.g) * dt
    if D[-1] <= 0:
        return None
    return float(np.sum(A - D) * dt / D[-1])


def metrics(trace: ScenarioTrace, window_frac: float | None = None) -> Summary:
    dt = trace.config.dt
    w = late_window(trace, window_frac)
    g = trace.g[w]
    return Summary(
        total_arrivals=float(trace.r.sum() * dt),
        total_departures=float(trace.g.sum() * dt),
        avg_travel_time=travel_time(trace),
        late_mean_g=float(g.mean()),
        late_g_min=float(g.min()),
        late_g_max=float(g.max()),
        late_mean_k_obs=float(trace.k_obs[w].mean()),
        late_drop_steps=int(trace.drop[w].sum()),
        drop_steps=int(trace.drop.sum()),
        clamp_events=trace.clamp_events,
        max_conservation_error=trace.max_conservation_error,
        final_queue=float(trace.final_queue),
        window_frac=trace.config.window_frac if window_frac is None else window_frac,
    )


def reduction_ratio(tt_vsl: float | None, tt_base: float | None) -> float | None:
    if tt_vsl is None or not tt_base:
        return None
    return 1.0 - tt_vsl / tt_base


def compare(trace_vsl: ScenarioTrace, trace_base: ScenarioTrace) -> float | None:
    """Travel-time reduction 1 - TT_vsl / TT_base for two runs on the same arrivals."""
    if trace_vsl.steps != trace_base.steps or trace_vsl.config.dt != trace_base.config.dt:
        raise ValueError("compare: traces must share horizon and time step")
    if not np.array_equal(trace_vsl.r, trace_base.r):
        raise ValueError("compare: traces were driven by different arrival realisations")
    return reduction_ratio(travel_time(trace_vsl), travel_time(trace_base))


def baseline_of(config: ScenarioConfig) -> ScenarioConfig:
    """Same scenario with the speed limit left at v_f."""
    return config.with_controller(ControllerConfig("none", u_min=config.controller.u_min))


def _fan_out(fn, items: Sequence, workers: int | None):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _summarise(config: ScenarioConfig) -> Summary:
    return metrics(run(config))


@dataclass(frozen=True)
class Comparison:
    seeds: tuple
    tt_vsl: tuple
    tt_base: tuple
    reductions: tuple
    totals: tuple  # total arrivals per seed

    @property
    def mean_reduction(self) -> float:
        return float(np.mean(self.reductions))

    @property
    def reduction_range(self) -> tuple[float, float]:
        return float(np.min(self.reductions)), float(np.max(self.reductions))


def compare_seeds(
    config_vsl: ScenarioConfig,
    seeds: Sequence[int],
    config_base: ScenarioConfig | None = None,
    workers: int | None = None,
) -> Comparison:
    """Run controlled and uncontrolled scenarios on a shared set of arrival seeds."""
    config_base = baseline_of(config_vsl) if config_base is None else config_base
    jobs = [c.with_seed(s) for s in seeds for c in (config_vsl, config_base)]
    sums = _fan_out(_summarise, jobs, workers)
    tv = tuple(s.avg_travel_time for s in sums[0::2])
    tb = tuple(s.avg_travel_time for s in sums[1::2])
    return Comparison(
        seeds=tuple(seeds),
        tt_vsl=tv,
        tt_base=tb,
        reductions=tuple(reduction_ratio(a, b) for a, b in zip(tv, tb)),
        totals=tuple(s.total_arrivals for s in sums[0::2]),
    )


def sweep_xi(base_config: ScenarioConfig, xi_values: Sequence[float], workers: int | None = None):
    """Late-window mean discharge for each target-density bias xi, as (xi, g) rows."""
    jobs = [base_config.with_controller(replace(base_config.controller, xi=float(x))) for x in xi_values]
    sums = _fan_out(_summarise, jobs, workers)
    return [(float(x), s.late_mean_g) for x, s in zip(xi_values, sums)]


def sweep_delta(
    base_config: ScenarioConfig,
    delta_values: Sequence[float],
    seeds: Sequence[int] = (0,),
    workers: int | None = None,
):
    """Seed-averaged travel-time reduction for each capacity-drop magnitude, as (delta, ratio) rows."""
    rows = []
    for delta in delta_values:
        cmp = compare_seeds(base_config.with_delta(float(delta)), seeds, workers=workers)
        rows.append((float(delta), cmp.mean_reduction))
    return rows

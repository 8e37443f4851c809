"""Variable speed limit control of a lane-drop bottleneck with capacity drop."""

from .analysis import (
    Equilibrium,
    SwitchedSystem,
    build_switched_system,
    classify_limit_behavior,
    classify_stability,
    closed_loop_equilibria,
    open_loop_equilibria,
    optimal_speed_limit,
)
from .controllers import ControllerConfig, ControllerState
from .demand import ConstantArrival, NormalStream, QueueState, TrapezoidArrival
from .engine import (
    DirectDemand,
    PlantConfig,
    ScenarioConfig,
    ScenarioTrace,
    compare,
    compare_seeds,
    metrics,
    run,
    sweep_delta,
    sweep_xi,
)
from .errors import ConfigError, DomainError, InvariantViolation
from .flow_core import (
    Bottleneck,
    DerivedConstants,
    FundamentalDiagram,
    derive_constants,
    reference_constants,
    reference_parameters,
)

__version__ = "0.1.0"

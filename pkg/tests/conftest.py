import pytest

from lanedrop import (
    ControllerConfig,
    DirectDemand,
    PlantConfig,
    ScenarioConfig,
    TrapezoidArrival,
    reference_constants,
    reference_parameters,
)


@pytest.fixture(scope="session")
def dc():
    return reference_constants()


@pytest.fixture(scope="session")
def dc0():
    return reference_constants(delta=0.0)


def link_scenario(controller=None, demand_factor=2.0, k0_factor=2.0, delta=0.2, **kw):
    """Constant demand d = demand_factor * C into a link queue starting at k0_factor * k_1."""
    fd, bn = reference_parameters(delta)
    dc = reference_constants(delta)
    return ScenarioConfig(
        fd=fd,
        bottleneck=bn,
        controller=controller or ControllerConfig(),
        demand=DirectDemand(demand_factor * dc.C),
        initial=k0_factor * dc.k_1,
        **kw,
    )


def stochastic_scenario(plant="link_queue", controller=None, delta=0.2, seed=0):
    fd, bn = reference_parameters(delta)
    C = bn.C
    return ScenarioConfig(
        fd=fd,
        bottleneck=bn,
        controller=controller or ControllerConfig.pi(beta=4.0),
        demand=TrapezoidArrival(peak=C, noise_std=0.02 * C, seed=seed),
        plant=PlantConfig(plant),
        name=f"stochastic_{plant}",
    )


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mcflow import exact, flow

settings.register_profile(
    "suite", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def unit_icosphere():
    from mcflow.geometry import icosphere

    return icosphere(4)


@pytest.fixture(scope="session")
def sphere_track():
    """Analytic unit sphere track on the default geometric schedule."""
    sol = exact.ShrinkingSphere()
    return flow.run_until(sol.state(0.0), flow.StopCriterion(max_A2=1e3))


@pytest.fixture(scope="session")
def cylinder_track():
    sol = exact.ShrinkingCylinder()
    return flow.run_until(sol.state(0.0), flow.StopCriterion(max_A2=1e3))


@pytest.fixture(scope="session")
def plane_track():
    return flow.run_until(exact.PlaneSolution().state(0.0), flow.StopCriterion(t_max=1.0))


@pytest.fixture(scope="session")
def dumbbell_track():
    from mcflow.scenario import dumbbell_profile

    return flow.run_until(
        dumbbell_profile(), flow.StopCriterion(max_A2=1e4), flow.DtPolicy(c_stab=0.01)
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])

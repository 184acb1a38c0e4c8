import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tcdirac.classical import integrate_trajectory
from tcdirac.constants import Constants
from tcdirac.germ import integrate_germ
from tcdirac.spin import integrate_spinor
from tcdirac.verify import CROSSED_Z0, reference_spec

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion lines collected by test_acceptance and echoed in the summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def crossed():
    """Trajectory, germ and both spin branches in the reference crossed field."""
    const = Constants()
    spec = reference_spec("crossed", const)
    traj = integrate_trajectory(spec, CROSSED_Z0, (0.0, 3.0), n_samples=301)
    germ = integrate_germ(traj)
    spins = {z: integrate_spinor(traj, const, ell=(1.0, 0.0, 0.0), zeta=z) for z in (1, -1)}
    return traj, germ, spins


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

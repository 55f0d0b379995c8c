import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from floquet_nonbloch.models import bulk_hamiltonian

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# filled by test_acceptance; echoed after the run so the verdicts survive output capture
ACCEPTANCE_LINES: dict[int, str] = {}

SINGLE = {"t1": 2.0, "t2": 0.15, "gamma": 0.16}
TWO = {"t": 1.0, "gamma": 0.5, "mu": 2.5, "delta": 0.1}


@pytest.fixture(scope="session")
def single_h():
    return bulk_hamiltonian("single_band", SINGLE)


@pytest.fixture(scope="session")
def two_h():
    return bulk_hamiltonian("two_band", TWO)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

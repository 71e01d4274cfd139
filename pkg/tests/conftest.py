import numpy as np
import pytest

from timeop import checks


@pytest.fixture(scope="session")
def free_setup():
    """(amplitude, system, field) for the free Gaussian reference packet."""
    return checks.free_reference_field()


@pytest.fixture(scope="session")
def barrier_setup():
    """(amplitude, system, field) for the rectangular-barrier reference packet."""
    return checks.barrier_reference_field()


@pytest.fixture(scope="session")
def free_field(free_setup):
    return free_setup[2]


@pytest.fixture(scope="session")
def barrier_field(barrier_setup):
    return barrier_setup[2]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance PASS/FAIL lines after the test report."""
    import sys

    mod = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

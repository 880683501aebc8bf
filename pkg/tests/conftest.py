"""Shared fixtures and the acceptance-criteria reporting hook."""
import numpy as np
import pytest

from nlslab import make_grid

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collector for the one-line-per-criterion verdicts."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid1d():
    return make_grid(1, 256, 20.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)

import numpy as np
import pytest

from isacfbl.bounds import CodeParams, SystemParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig_sys():
    """rho = 10, sigma = 1, |h| in [1, 1.5]."""
    return SystemParams.from_sigma(10.0, 1.0, 1.0, 1.5)


@pytest.fixture
def code20():
    return CodeParams(20, 1e-3)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

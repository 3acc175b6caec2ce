import numpy as np
import pytest

from polprop import geometry as geo


@pytest.fixture(scope="session")
def mink():
    return geo.minkowski(4)


@pytest.fixture(scope="session")
def flrw():
    return geo.flrw(params={"H": 1.0})


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[cid].line())

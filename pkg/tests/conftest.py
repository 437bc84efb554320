import warnings

import numpy as np
import pytest

from phasecg.grid import GridSpec


@pytest.fixture(scope="session")
def grid():
    return GridSpec.centered(256, 40.0)


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec.centered(32, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_mask_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="masked fraction")
        yield


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

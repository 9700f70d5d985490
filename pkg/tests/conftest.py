import os

import numpy as np
import pytest

from stochmaxwell.experiments import initial_condition
from stochmaxwell.grid import GridSpec, wavelet_curl

ACCEPTANCE_LINES: list[str] = []


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SMAXWELL_FAST"):
        skip = pytest.mark.skip(reason="SMAXWELL_FAST set")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec.cube(4)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec.cube(5)


@pytest.fixture(scope="session")
def curl16(grid16):
    return wavelet_curl(grid16, 10)


@pytest.fixture(scope="session")
def curl32(grid32):
    return wavelet_curl(grid32, 10)


@pytest.fixture
def ic16(grid16):
    return initial_condition(grid16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import os
import sys

import numpy as np
import pytest
from hypothesis import settings

from hopss.pipeline import generate_tradition, recipe

settings.register_profile("default", deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def small_ns_config(count=6, seed=3):
    return recipe("ns2d", n=32, steps=200, stride=10, coarsen=1, count=count, seed=seed)


def small_burgers_config(count=8, seed=5):
    return recipe("burgers", n=256, coarsen=4, count=count, seed=seed)


def small_kdv_config(count=6, seed=9):
    return recipe("kdv", n=128, steps=1000, stride=50, coarsen=2, count=count, seed=seed)


@pytest.fixture(scope="session")
def ns_base():
    return generate_tradition(small_ns_config())


@pytest.fixture(scope="session")
def burgers_base():
    return generate_tradition(small_burgers_config())


@pytest.fixture(scope="session")
def kdv_base():
    return generate_tradition(small_kdv_config())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

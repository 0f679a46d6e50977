import os

import pytest
from hypothesis import HealthCheck, settings

from ghpursuit.generators import circle, interval, random_tree, theta

settings.register_profile("ci", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

# filled by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def unit_interval():
    return interval(1.0)


@pytest.fixture
def unit_circle():
    return circle(1.0)


@pytest.fixture
def theta123():
    return theta(1.0, 2.0, 3.0)


@pytest.fixture
def tree8():
    return random_tree(8, seed=3)

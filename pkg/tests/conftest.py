"""Shared fixtures and the acceptance summary printed at the end of a run."""

import numpy as np
import pytest

from helpers import ACCEPTANCE_LINES, random_instances


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def instances():
    return random_instances(11, 200)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

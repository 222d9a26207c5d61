import numpy as np
import pytest

from imcflow.domain import DomainSpec
from imcflow.oracles import ball_patch

ACCEPTANCE_LINES = []


@pytest.fixture
def torus2():
    return DomainSpec.torus(2, 32)


@pytest.fixture
def ball3():
    return ball_patch(3, 17)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

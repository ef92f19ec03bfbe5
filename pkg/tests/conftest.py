import numpy as np
import pytest

from rtgraph import ExponentialFitness, ParetoFitness, constant_intensity_model


@pytest.fixture
def exp_model():
    return ExponentialFitness(1.0)


@pytest.fixture
def pareto_model():
    return ParetoFitness(1.0, 2.0)


@pytest.fixture
def const_model():
    return constant_intensity_model(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

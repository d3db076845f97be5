import numpy as np
import pytest

from dpevalues.distributions import GaussianDistribution, TestingPair, bernoulli


@pytest.fixture
def bern_pair():
    return TestingPair(bernoulli(0.3), bernoulli(0.7))


@pytest.fixture
def gauss_pair():
    return TestingPair(GaussianDistribution(0.0, 1.0), GaussianDistribution(1.0, 1.0))


@pytest.fixture
def same_pair():
    return TestingPair(bernoulli(0.4), bernoulli(0.4))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


BERNOULLI_GRID = [round(0.1 * k, 1) for k in range(1, 10)]
EPS_GRID = [0.25, 0.5, 1.0, 2.0, 4.0]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

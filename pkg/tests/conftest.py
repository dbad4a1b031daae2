import numpy as np
import pytest

from edgedelete import make_network


@pytest.fixture
def rng():
    return np.random.default_rng(20060707)


@pytest.fixture
def chain():
    """Binary chain A -> B -> C."""
    return make_network([
        ("A", ["a0", "a1"], [], [0.6, 0.4]),
        ("B", ["b0", "b1"], ["A"], [[0.7, 0.3], [0.2, 0.8]]),
        ("C", ["c0", "c1"], ["B"], [[0.9, 0.1], [0.25, 0.75]]),
    ], name="chain")


@pytest.fixture
def diamond():
    """Binary diamond A -> B, A -> C, B -> D, C -> D."""
    return make_network([
        ("A", ["a0", "a1"], [], [0.5, 0.5]),
        ("B", ["b0", "b1"], ["A"], [[0.8, 0.2], [0.3, 0.7]]),
        ("C", ["c0", "c1"], ["A"], [[0.6, 0.4], [0.1, 0.9]]),
        ("D", ["d0", "d1"], ["B", "C"], [[[0.9, 0.1], [0.4, 0.6]], [[0.35, 0.65], [0.05, 0.95]]]),
    ], name="diamond")


def marginal_error(a, b, variables):
    return max(float(np.abs(np.asarray(a[v]) - np.asarray(b[v])).max()) for v in variables)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)

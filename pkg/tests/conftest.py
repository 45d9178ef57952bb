import numpy as np
import pytest

from chiral_winding import CoefficientField

# Lines recorded by tests/test_acceptance.py, printed after the run.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def generic_field():
    """A field with complex, non-orthogonal coefficient functions."""
    def make(cls="AIII", N=2):
        return CoefficientField(cls, "fourier", N,
                                {1: 0.8, -1: 0.3 + 0.2j, 0: 0.1},
                                {1: -0.4j, 2: 0.25, -1: 0.5})
    return make

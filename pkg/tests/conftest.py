import numpy as np
import pytest
from hypothesis import settings

from discrete_dirac.lattice import LatticeWindow, MatrixPotential
from discrete_dirac.potentials import seeded_random

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")

# non-resonant at all four edges (checked in test_scattering); bound states at -3.17, 3.63
GENERIC_SITE = [[2.0, 0.5], [0.5, -1.5]]


@pytest.fixture
def generic_q():
    return MatrixPotential.from_sites({0: GENERIC_SITE})


@pytest.fixture
def weak_q():
    return MatrixPotential.from_sites({0: [[0.3, 0.1], [0.1, -0.2]]})


@pytest.fixture
def random_qs():
    """Ten moderate random compact potentials on [-2, 2]."""
    return [seeded_random(seed, 2) for seed in range(10)]


@pytest.fixture
def multi_q():
    return MatrixPotential.from_sites({
        -1: [[0.3, 0.1], [0.1, -0.2]],
        0: [[0.2, -0.05], [-0.05, 0.4]],
        2: [[-0.1, 0.0], [0.0, 0.1]],
    })


def interior(half):
    return LatticeWindow.symmetric(half)


def rng(seed=0):
    return np.random.default_rng(seed)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """``report(number, ok, detail)`` prints and records one PASS/FAIL line."""

    def report(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append((number, line))
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)

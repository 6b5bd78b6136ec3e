from fractions import Fraction as Fr
from pathlib import Path

import numpy as np
import pytest

from modalnf.engine import run
from modalnf.problem import burgers_problem
from modalnf.spectral import GapParams

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"
BURGERS_GAP = GapParams(Fr(0), Fr(3), Fr(1), Fr(1, 20))

# filled by test_acceptance.report, echoed in the terminal summary
ACCEPTANCE = []


def random_state(rng, modes, norm):
    modes = sorted(modes)
    z = rng.normal(size=len(modes)) + 1j * rng.normal(size=len(modes))
    z *= norm / np.linalg.norm(z)
    return dict(zip(modes, z))


@pytest.fixture(scope="session")
def burgers():
    return burgers_problem(Fr(1), 5, BURGERS_GAP, order=4)


@pytest.fixture(scope="session")
def burgers_p3(burgers):
    return run(burgers.model, burgers.nonlinearity, 3)


@pytest.fixture(scope="session")
def burgers_p4(burgers):
    return run(burgers.model, burgers.nonlinearity, 4)


@pytest.fixture(scope="session")
def burgers_cfg():
    return PROBLEMS / "burgers_r1.cfg"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)

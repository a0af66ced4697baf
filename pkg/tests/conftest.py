import random
from pathlib import Path

import pytest

from partial_oper.exactalg import Poly, PolyMatrix, rat

FIXTURES = Path(__file__).parent / "fixtures"


def q(x):
    return rat(x)


def P(*coeffs):
    """Polynomial from coefficients, constant term first."""
    return Poly([rat(c) for c in coeffs])


def M(rows):
    return PolyMatrix([[x if isinstance(x, Poly) else P(x) for x in r] for r in rows])


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def fixtures():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

import math

import numpy as np
import pytest
from scipy.linalg import solve_triangular

from greedycd import DenseMatrix, GenSpec, Problem, generate_problem

R2 = math.sqrt(2.0)


def qr_lstsq(A, b):
    """Least-squares oracle via a dense Householder QR of A."""
    data = A.data if isinstance(A, DenseMatrix) else np.asarray(A)
    Q, R = np.linalg.qr(data)
    return solve_triangular(R, Q.T @ b)


def rse(x, ref):
    d = np.asarray(x) - ref
    return float(d @ d / (ref @ ref))


@pytest.fixture
def ortho32():
    """3x2 identity-extended matrix with b = (1, 2, 3)."""
    A = DenseMatrix([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    b = np.array([1.0, 2.0, 3.0])
    return Problem(A, b, np.array([1.0, 2.0]), consistent=False)


@pytest.fixture
def skew32():
    """Columns (1,0,0) and (1,1,0)/sqrt2, inner product 1/sqrt2."""
    return DenseMatrix([[1.0, 1 / R2], [0.0, 1 / R2], [0.0, 0.0]])


@pytest.fixture(scope="session")
def small_problems():
    """Consistent 30x6 instances across three coherence levels."""
    out = []
    for c in (-0.8, 0.5, 0.9):
        for seed in range(4):
            out.append(generate_problem(GenSpec(30, 6, c, seed=seed))[0])
    return out


_ACCEPTANCE = pytest.StashKey()


@pytest.fixture
def verdict(request):
    """``verdict(label, ok, detail)`` records one acceptance line and asserts it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip()
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

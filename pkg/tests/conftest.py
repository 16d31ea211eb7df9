import sys
from pathlib import Path

import numpy as np
import pytest

from sjquant.kahler import PauliJordanOperator

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def random_gram(rng, n):
    a = rng.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


def random_pauli_jordan(rng, n, gram=True):
    """Gram-antisymmetric, invertible ``E`` on an ``n``-dimensional space (``n`` even)."""
    g = random_gram(rng, n) if gram else np.eye(n)
    s = rng.standard_normal((n, n))
    s = s - s.T
    return PauliJordanOperator.from_matrix(np.linalg.solve(g, s), g)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)

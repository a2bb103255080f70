import numpy as np
import pytest

from mcchaos.kron_operator import operator_from_matrices
from mcchaos.mesh_fem import TridiagonalMatrix


def random_spd_tridiagonal(rng, n):
    off = rng.uniform(-1.0, 1.0, n - 1)
    diag = rng.uniform(0.5, 2.0, n)
    diag[:-1] += np.abs(off)
    diag[1:] += np.abs(off)
    return TridiagonalMatrix(diag, off)


def random_toy(rng, s_count=None, n2=None, n_dof=None):
    """A small random chaos operator with full-column-rank Z (S >= N2)."""
    n2 = n2 or int(rng.integers(1, 11))
    s_count = s_count or int(rng.integers(n2, 31))
    n_dof = n_dof or int(rng.integers(2, 21))
    mats = [random_spd_tridiagonal(rng, n_dof) for _ in range(s_count)]
    z = rng.standard_normal((s_count, n2))
    return operator_from_matrices(mats, z), mats, z


@pytest.fixture
def toys():
    rng = np.random.default_rng(20240601)
    return [random_toy(rng) for _ in range(20)]


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the line is printed now and again in the run summary."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)

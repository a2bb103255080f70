"""Uniform 1D meshes and P1 finite element assembly on [0, 1].

Homogeneous Dirichlet nodes are eliminated, so every matrix and vector here
lives on the ``n_elements - 1`` interior nodes.  Element integrals use the
2-point Gauss-Legendre rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from .errors import AssemblyError, InvalidArgument, SolverError

GAUSS_POINTS = np.array([-1.0, 1.0]) / np.sqrt(3.0)
GAUSS_WEIGHTS = np.array([1.0, 1.0])

# P1 shape functions at the Gauss points of the reference element [-1, 1]
_SHAPE_LEFT = (1.0 - GAUSS_POINTS) / 2.0   # node at the left end of the element
_SHAPE_RIGHT = (1.0 + GAUSS_POINTS) / 2.0  # node at the right end of the element


@dataclass(frozen=True)
class Mesh1D:
    n_elements: int
    nodes: np.ndarray
    h: float

    @property
    def n_dof(self) -> int:
        return self.n_elements - 1

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[1:-1]

    def quadrature_points(self) -> np.ndarray:
        """Physical Gauss points, shape ``(n_elements, 2)``."""
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return mids[:, None] + 0.5 * self.h * GAUSS_POINTS[None, :]


def build_mesh(n_elements: int) -> Mesh1D:
    if int(n_elements) != n_elements or n_elements < 2:
        raise InvalidArgument(f"n_elements must be an integer >= 2, got {n_elements!r}")
    n_elements = int(n_elements)
    nodes = np.arange(n_elements + 1, dtype=float) / n_elements
    return Mesh1D(n_elements=n_elements, nodes=nodes, h=1.0 / n_elements)


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal."""

    diag: np.ndarray
    off: np.ndarray

    @property
    def shape(self):
        n = self.diag.shape[-1]
        return (n, n)

    def __matmul__(self, v):
        return tridiag_matvec(self.diag, self.off, np.asarray(v, dtype=float))

    def entry(self, i: int, j: int) -> float:
        if i == j:
            return float(self.diag[i])
        if abs(i - j) == 1:
            return float(self.off[min(i, j)])
        return 0.0

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def quadratic_form(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ (self @ v))

    def __mul__(self, c):
        return TridiagonalMatrix(self.diag * c, self.off * c)

    __rmul__ = __mul__


def tridiag_matvec(diag: np.ndarray, off: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Batched symmetric tridiagonal product; leading axes broadcast."""
    out = diag * v
    out[..., :-1] += off * v[..., 1:]
    out[..., 1:] += off * v[..., :-1]
    return out


def element_averages(values: np.ndarray) -> np.ndarray:
    """Gauss-rule element mean of values sampled at ``quadrature_points``."""
    return values @ GAUSS_WEIGHTS / GAUSS_WEIGHTS.sum()


def stiffness_bands(q: np.ndarray, h: float):
    """Interior stiffness bands from element coefficients ``q`` (last axis = element).

    Element ``e`` spans nodes ``e`` and ``e + 1``; interior node ``i`` (1-based
    in the full mesh) sits between elements ``i - 1`` and ``i``.
    """
    diag = (q[..., :-1] + q[..., 1:]) / h
    off = -q[..., 1:-1] / h
    return diag, off


def load_from_quadrature(fq: np.ndarray, h: float) -> np.ndarray:
    """Interior load vector from forcing values at the Gauss points, shape ``(..., n_el, 2)``."""
    half = 0.5 * h
    right_end = (fq[..., :-1, :] * (GAUSS_WEIGHTS * _SHAPE_RIGHT)).sum(-1)
    left_end = (fq[..., 1:, :] * (GAUSS_WEIGHTS * _SHAPE_LEFT)).sum(-1)
    return half * (right_end + left_end)


def _check_finite(values: np.ndarray, what: str):
    bad = ~np.isfinite(values)
    if bad.any():
        element = int(np.argwhere(bad)[0][0])
        raise AssemblyError(f"non-finite {what} at a quadrature point", element=element)


def assemble_stiffness(mesh: Mesh1D, coeff) -> TridiagonalMatrix:
    """Stiffness matrix of ``-(coeff u')'`` with coeff given as a vectorized callable of x."""
    values = np.asarray(coeff(mesh.quadrature_points()), dtype=float)
    values = np.broadcast_to(values, (mesh.n_elements, 2))
    _check_finite(values, "coefficient value")
    diag, off = stiffness_bands(element_averages(values), mesh.h)
    return TridiagonalMatrix(diag, off)


def assemble_mass(mesh: Mesh1D) -> TridiagonalMatrix:
    n = mesh.n_dof
    return TridiagonalMatrix(np.full(n, 2.0 * mesh.h / 3.0), np.full(n - 1, mesh.h / 6.0))


def unit_stiffness(mesh: Mesh1D) -> TridiagonalMatrix:
    n = mesh.n_dof
    return TridiagonalMatrix(np.full(n, 2.0 / mesh.h), np.full(n - 1, -1.0 / mesh.h))


def assemble_load(mesh: Mesh1D, f) -> np.ndarray:
    values = np.asarray(f(mesh.quadrature_points()), dtype=float)
    values = np.broadcast_to(values, (mesh.n_elements, 2))
    _check_finite(values, "forcing value")
    return load_from_quadrature(values, mesh.h)


def solve_deterministic(A: TridiagonalMatrix, b) -> np.ndarray:
    """Banded Cholesky solve of an SPD tridiagonal system."""
    b = np.asarray(b, dtype=float)
    if b.shape[-1] != A.diag.shape[0]:
        raise InvalidArgument(f"right-hand side has length {b.shape[-1]}, matrix is {A.shape}")
    if not np.any(b):
        return np.zeros_like(b)
    ab = np.zeros((2, A.diag.shape[0]))
    ab[0, 1:] = A.off
    ab[1] = A.diag
    try:
        return solveh_banded(ab, b.T, check_finite=True).T
    except (LinAlgError, ValueError) as exc:
        raise SolverError(f"stiffness matrix is singular or indefinite: {exc}") from exc

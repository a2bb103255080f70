"""Monte Carlo assembled chaos Galerkin operator.

The coupled system is ``Z^T W diag(A_1, ..., A_S) Z`` acting on a chaos vector
stored polynomial-major as an ``(N2, N_dof)`` array: row ``j`` holds the
nodal coefficients of basis function ``v_j``.  With uniform weights
``W = I / S`` this is the plain Monte Carlo average.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from .chaos_basis import ChaosBasis, eval_matrix
from .errors import InvalidArgument, UnsupportedBasis
from .mesh_fem import Mesh1D, TridiagonalMatrix, load_from_quadrature, stiffness_bands, tridiag_matvec
from .random_field import (
    CoefficientModel,
    ForcingModel,
    SampleSet,
    element_coefficients,
    forcing_quadrature,
)

DENSIFY_LIMIT = 5000
_CHUNK = 512


def _check_weights(weights, s_count):
    if weights is None:
        return np.full(s_count, 1.0 / s_count)
    w = np.asarray(weights, dtype=float)
    if w.shape != (s_count,):
        raise InvalidArgument(f"expected {s_count} weights, got shape {w.shape}")
    if not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12) or np.any(w < 0):
        raise InvalidArgument("sample weights must be nonnegative and sum to 1")
    return w


@dataclass(eq=False)
class KroneckerChaosOperator:
    """Matrix-free ``Z^T W diag(A_r) Z``.

    ``diag``/``off`` hold the per-sample stiffness bands, shape ``(S, N_dof)``
    and ``(S, N_dof - 1)``.  In low-memory mode they are ``None`` and the
    bands are rebuilt from ``model`` and ``sample_values`` on every apply.
    """

    z: np.ndarray
    weights: np.ndarray
    diag: np.ndarray | None = None
    off: np.ndarray | None = None
    mesh: Mesh1D | None = None
    basis: ChaosBasis | None = None
    model: CoefficientModel | None = None
    sample_values: np.ndarray | None = None
    _mean_bands: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        s = self.z.shape[0]
        if self.weights.shape != (s,):
            raise InvalidArgument("weights do not match the number of samples")
        if self.diag is not None:
            if self.diag.shape[0] != s or self.off.shape != (s, self.diag.shape[1] - 1):
                raise InvalidArgument("per-sample stiffness stack does not match Z")
        elif self.model is None or self.sample_values is None or self.mesh is None:
            raise InvalidArgument("low-memory operator needs mesh, model and samples")

    @property
    def s_count(self) -> int:
        return self.z.shape[0]

    @property
    def n2(self) -> int:
        return self.z.shape[1]

    @property
    def n_dof(self) -> int:
        return self.diag.shape[1] if self.diag is not None else self.mesh.n_dof

    @property
    def shape(self):
        n = self.n2 * self.n_dof
        return (n, n)

    @property
    def low_memory(self) -> bool:
        return self.diag is None

    def _bands(self, rows: slice):
        if self.diag is not None:
            return self.diag[rows], self.off[rows]
        q = element_coefficients(self.model, self.mesh, self.sample_values[rows])
        return stiffness_bands(q, self.mesh.h)

    def stiffness(self, r: int) -> TridiagonalMatrix:
        d, o = self._bands(slice(r, r + 1))
        return TridiagonalMatrix(d[0].copy(), o[0].copy())

    def apply(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        flat = u.ndim == 1
        if flat:
            if u.size != self.n2 * self.n_dof:
                raise InvalidArgument(f"vector of length {u.size} does not match operator {self.shape}")
            u = u.reshape(self.n2, self.n_dof)
        elif u.shape != (self.n2, self.n_dof):
            raise InvalidArgument(f"chaos vector shape {u.shape} != {(self.n2, self.n_dof)}")
        if self.diag is not None:
            t = tridiag_matvec(self.diag, self.off, self.z @ u)
            out = self.z.T @ (self.weights[:, None] * t)
        else:
            out = np.zeros_like(u)
            for start in range(0, self.s_count, _CHUNK):
                rows = slice(start, start + _CHUNK)
                d, o = self._bands(rows)
                t = tridiag_matvec(d, o, self.z[rows] @ u)
                out += self.z[rows].T @ (self.weights[rows, None] * t)
        return out.ravel() if flat else out

    __matmul__ = apply

    def densify(self, limit: int = DENSIFY_LIMIT) -> np.ndarray:
        """Explicit matrix; block ``(i, j)`` is ``sum_r w_r z_ri z_rj A_r``."""
        n = self.n2 * self.n_dof
        if n > limit:
            raise InvalidArgument(f"refusing to densify a {n} x {n} operator (limit {limit})")
        out = np.zeros((n, n))
        for start in range(0, self.s_count, _CHUNK):
            rows = slice(start, start + _CHUNK)
            d, o = self._bands(rows)
            for k, r in enumerate(range(*rows.indices(self.s_count))):
                a = np.diag(d[k]) + np.diag(o[k], 1) + np.diag(o[k], -1)
                out += np.kron(self.weights[r] * np.outer(self.z[r], self.z[r]), a)
        return out

    def gram(self) -> np.ndarray:
        """Stochastic Gram matrix ``Z^T W Z``."""
        return self.z.T @ (self.weights[:, None] * self.z)

    def gram_condition(self) -> float:
        s = np.linalg.svd(np.sqrt(self.weights)[:, None] * self.z, compute_uv=False)
        return float(s[0] / s[-1]) ** 2 if s[-1] > 0 else float("inf")

    def rank_deficient(self) -> bool:
        """True when ``Z`` (weighted) lacks full column rank, so the operator is only semidefinite."""
        if self.s_count < self.n2:
            return True
        zw = np.sqrt(self.weights)[:, None] * self.z
        return int(np.linalg.matrix_rank(zw)) < self.n2

    def mean_bands(self):
        """Bands of the weighted mean stiffness ``sum_r w_r A_r``."""
        if self._mean_bands is None:
            d = np.zeros(self.n_dof)
            o = np.zeros(self.n_dof - 1)
            for start in range(0, self.s_count, _CHUNK):
                rows = slice(start, start + _CHUNK)
                dd, oo = self._bands(rows)
                d += self.weights[rows] @ dd
                o += self.weights[rows] @ oo
            self._mean_bands = (d, o)
        return self._mean_bands

    def mean_block_preconditioner(self):
        """Inverse of ``diag(Z^T W Z) (x) A_mean``, applied with banded Cholesky."""
        d, o = self.mean_bands()
        ab = np.zeros((2, self.n_dof))
        ab[0, 1:] = o
        ab[1] = d
        g = np.diag(self.gram()).copy()
        g[g <= 0] = 1.0

        def apply_inverse(r):
            shaped = np.asarray(r).reshape(self.n2, self.n_dof)
            return (solveh_banded(ab, shaped.T).T / g[:, None]).reshape(np.shape(r))

        return apply_inverse


def sample_stiffness(mesh: Mesh1D, samples: SampleSet, model: CoefficientModel):
    """Stacked bands of every per-sample stiffness matrix."""
    if samples.n_vars != model.n_vars:
        raise InvalidArgument(f"samples have {samples.n_vars} variables, model has {model.n_vars}")
    q = element_coefficients(model, mesh, samples.values)
    return stiffness_bands(q, mesh.h)


def sample_loads(mesh: Mesh1D, samples: SampleSet, forcing: ForcingModel) -> np.ndarray:
    """Per-sample load vectors, shape ``(S, N_dof)``."""
    return load_from_quadrature(forcing_quadrature(forcing, mesh, samples.values), mesh.h)


def operator_from_matrices(stiffness, z, weights=None, mesh=None, basis=None) -> KroneckerChaosOperator:
    """Build an operator from explicit per-sample matrices (TridiagonalMatrix or dense tridiagonal)."""
    z = np.asarray(z, dtype=float)
    diags, offs = [], []
    for a in stiffness:
        if not isinstance(a, TridiagonalMatrix):
            a = np.asarray(a, dtype=float)
            a = TridiagonalMatrix(np.diag(a).copy(), np.diag(a, 1).copy())
        diags.append(a.diag)
        offs.append(a.off)
    if len(diags) != z.shape[0]:
        raise InvalidArgument(f"{len(diags)} matrices for {z.shape[0]} rows of Z")
    return KroneckerChaosOperator(z=z, weights=_check_weights(weights, z.shape[0]),
                                  diag=np.array(diags), off=np.array(offs), mesh=mesh, basis=basis)


def assemble_operator(mesh: Mesh1D, basis: ChaosBasis, samples: SampleSet, model: CoefficientModel,
                      weights=None, low_memory: bool = False, z=None) -> KroneckerChaosOperator:
    """Assemble the chaos operator; ``z`` may be injected to bypass basis evaluation."""
    if samples.n_vars != basis.n_vars:
        raise InvalidArgument(f"samples have {samples.n_vars} variables, basis has {basis.n_vars}")
    z = eval_matrix(basis, samples) if z is None else np.asarray(z, dtype=float)
    w = _check_weights(weights, samples.s_count)
    if z.shape[1] > samples.s_count:
        warnings.warn(f"S={samples.s_count} samples < N2={z.shape[1]} basis functions: "
                      "the assembled operator is only semidefinite", RuntimeWarning, stacklevel=2)
    if low_memory:
        if samples.n_vars != model.n_vars:
            raise InvalidArgument(f"samples have {samples.n_vars} variables, model has {model.n_vars}")
        return KroneckerChaosOperator(z=z, weights=w, mesh=mesh, basis=basis, model=model,
                                      sample_values=np.array(samples.values))
    diag, off = sample_stiffness(mesh, samples, model)
    return KroneckerChaosOperator(z=z, weights=w, diag=diag, off=off, mesh=mesh, basis=basis)


def apply(op: KroneckerChaosOperator, u) -> np.ndarray:
    return op.apply(u)


def densify(op: KroneckerChaosOperator, limit: int = DENSIFY_LIMIT) -> np.ndarray:
    return op.densify(limit)


def project_loads(loads: np.ndarray, z: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``Z^T W F`` for stacked per-sample loads ``F`` of shape ``(S, N_dof)``."""
    return z.T @ (weights[:, None] * loads)


def assemble_rhs(mesh: Mesh1D, basis: ChaosBasis, samples: SampleSet, forcing: ForcingModel,
                 weights=None, z=None) -> np.ndarray:
    if samples.n_vars != basis.n_vars:
        raise InvalidArgument(f"samples have {samples.n_vars} variables, basis has {basis.n_vars}")
    z = eval_matrix(basis, samples) if z is None else np.asarray(z, dtype=float)
    return project_loads(sample_loads(mesh, samples, forcing), z, _check_weights(weights, samples.s_count))


@dataclass
class ChaosSolution:
    coefficients: np.ndarray
    mesh: Mesh1D | None = None
    basis: ChaosBasis | None = None
    report: object = None

    def block(self, j: int) -> np.ndarray:
        return self.coefficients[j]


def mean_field(sol: ChaosSolution) -> np.ndarray:
    """The mean of the expansion: the coefficient of the constant basis function."""
    if sol.basis is not None and not sol.basis.has_constant_first:
        raise UnsupportedBasis(f"basis kind {sol.basis.kind!r} has no constant first member")
    return sol.coefficients[0]


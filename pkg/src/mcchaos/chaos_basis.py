"""Stochastic polynomial bases: Hermite products, Lagrange cardinals, Gauss-Hermite rules.

Hermite polynomials use the probabilists' convention, He_0 = 1, He_1 = y,
orthogonal under the standard normal measure with E[He_m He_n] = n! delta_mn.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, InvalidArgument, NumericalError

HERMITE_TOTAL_DEGREE = "hermite_total_degree"
TENSOR_HERMITE = "tensor_hermite"
LAGRANGE_CARDINAL = "lagrange_cardinal"


def hermite_eval(n: int, y):
    """He_n(y) by the three-term recurrence; works elementwise on arrays."""
    if n < 0:
        raise InvalidArgument(f"Hermite degree must be >= 0, got {n}")
    return hermite_table(n, y)[n]


def hermite_table(max_degree: int, y) -> np.ndarray:
    """Stack of He_0(y) ... He_max_degree(y), shape ``(max_degree + 1,) + y.shape``."""
    y = np.asarray(y, dtype=float)
    out = np.empty((max_degree + 1,) + y.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = y
    for k in range(1, max_degree):
        out[k + 1] = y * out[k] - k * out[k - 1]
    return out


def _compositions(total: int, n_vars: int):
    # descending lexicographic: (2,0), (1,1), (0,2)
    if n_vars == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, n_vars - 1):
            yield (first,) + rest


def total_degree_index_set(n_vars: int, max_degree: int) -> list[tuple[int, ...]]:
    """All multi-indices with total degree <= max_degree in graded-lex order."""
    if n_vars < 1 or max_degree < 0:
        raise InvalidArgument(f"need n_vars >= 1 and max_degree >= 0, got {n_vars}, {max_degree}")
    return [alpha for t in range(max_degree + 1) for alpha in _compositions(t, n_vars)]


def tensor_index_set(max_degrees) -> list[tuple[int, ...]]:
    """Full tensor set {alpha : alpha_k <= max_degrees[k]} in graded-lex order."""
    max_degrees = tuple(int(m) for m in max_degrees)
    if not max_degrees or min(max_degrees) < 0:
        raise InvalidArgument(f"invalid per-variable degrees {max_degrees}")
    full = total_degree_index_set(len(max_degrees), sum(max_degrees))
    return [a for a in full if all(ak <= mk for ak, mk in zip(a, max_degrees))]


@dataclass(frozen=True)
class ChaosBasis:
    """A finite family of polynomials in y with a fixed ordering.

    Hermite kinds carry their multi-indices; the Lagrange kind carries its
    defining nodes (one variable only).
    """

    kind: str
    n_vars: int
    indices: tuple = ()
    nodes: np.ndarray | None = None
    orthonormal: bool = False
    _bary: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        if self.kind == LAGRANGE_CARDINAL:
            return len(self.nodes)
        return len(self.indices)

    @property
    def has_constant_first(self) -> bool:
        return self.kind != LAGRANGE_CARDINAL and not any(self.indices[0])

    def norms_squared(self) -> np.ndarray:
        """E[v_j^2] under the standard normal measure (Hermite kinds only)."""
        if self.kind == LAGRANGE_CARDINAL:
            raise InvalidArgument("Lagrange cardinal functions have no closed-form norms")
        if self.orthonormal:
            return np.ones(self.size)
        return self._factorial_norms()

    def _factorial_norms(self) -> np.ndarray:
        return np.array([math.prod(math.factorial(a) for a in alpha) for alpha in self.indices],
                        dtype=float)

    def evaluate(self, y) -> np.ndarray:
        """Basis values at points ``y`` of shape ``(S, n_vars)``; returns ``(S, size)``."""
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            y = y[:, None] if self.n_vars == 1 else y[None, :]
        if y.shape[-1] != self.n_vars:
            raise InvalidArgument(f"points have {y.shape[-1]} components, basis expects {self.n_vars}")
        if self.kind == LAGRANGE_CARDINAL:
            return _lagrange_eval(self.nodes, self._bary, y[:, 0])
        max_deg = max(max(a) for a in self.indices)
        tables = [hermite_table(max_deg, y[:, k]) for k in range(self.n_vars)]
        out = np.empty((y.shape[0], self.size))
        for j, alpha in enumerate(self.indices):
            col = np.ones(y.shape[0])
            for k, a in enumerate(alpha):
                if a:
                    col = col * tables[k][a]
            out[:, j] = col
        if self.orthonormal:
            out /= np.sqrt(self._factorial_norms())
        return out


def hermite_basis(n_vars: int, max_degree: int, orthonormal: bool = False) -> ChaosBasis:
    return ChaosBasis(HERMITE_TOTAL_DEGREE, n_vars,
                      tuple(total_degree_index_set(n_vars, max_degree)), orthonormal=orthonormal)


def tensor_hermite_basis(max_degrees, orthonormal: bool = False) -> ChaosBasis:
    idx = tensor_index_set(max_degrees)
    return ChaosBasis(TENSOR_HERMITE, len(idx[0]), tuple(idx), orthonormal=orthonormal)


def lagrange_basis(nodes) -> ChaosBasis:
    """Cardinal basis on distinct 1D nodes, evaluated in barycentric form."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim == 2:
        if nodes.shape[1] != 1:
            raise InvalidArgument("Lagrange cardinal bases are supported for one variable only")
        nodes = nodes[:, 0]
    if len(np.unique(nodes)) != len(nodes):
        raise InvalidArgument("Lagrange nodes must be distinct")
    diffs = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diffs, 1.0)
    # log-magnitude keeps the weights representable for hundreds of nodes
    logw = -np.log(np.abs(diffs)).sum(axis=1)
    sign = np.prod(np.sign(diffs), axis=1)
    bary = sign * np.exp(logw - logw.max())
    return ChaosBasis(LAGRANGE_CARDINAL, 1, nodes=nodes, _bary=bary)


def _lagrange_eval(nodes, bary, y):
    diff = y[:, None] - nodes[None, :]
    hit = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = bary / diff
        out = terms / terms.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    out[rows] = hit[rows].astype(float)
    return out


def basis_eval(basis: ChaosBasis, y) -> np.ndarray:
    """Values of every basis function at the single point ``y``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (basis.n_vars,):
        raise InvalidArgument(f"point has {y.size} components, basis expects {basis.n_vars}")
    return basis.evaluate(y[None, :])[0]


def eval_matrix(basis: ChaosBasis, samples) -> np.ndarray:
    """The S x N2 matrix z[r, j] = v_j(y_r).  ``samples`` is a SampleSet or an array."""
    values = getattr(samples, "values", samples)
    z = basis.evaluate(values)
    bad = ~np.isfinite(z)
    if bad.any():
        r, j = (int(i) for i in np.argwhere(bad)[0])
        raise EvaluationError(f"basis function {j} is not finite at sample {r}")
    return z


def gauss_hermite_nodes(n: int, tol: float = 1e-14, max_iter: int = 100):
    """Nodes and weights of the n-point Gauss rule for the standard normal measure.

    Roots of He_n are polished by Newton's method on the normalized recurrence,
    starting from the eigenvalues of the Jacobi matrix.
    """
    if n < 1:
        raise InvalidArgument(f"number of nodes must be >= 1, got {n}")
    if n == 1:
        return np.zeros(1), np.ones(1)
    off = np.sqrt(np.arange(1, n, dtype=float))
    x = np.linalg.eigvalsh(np.diag(off, 1) + np.diag(off, -1))
    for _ in range(max_iter):
        p, p_prev = _normalized_hermite_pair(n, x)
        step = p / (math.sqrt(n) * p_prev)
        x = x - step
        if np.max(np.abs(step)) <= tol * max(1.0, np.max(np.abs(x))):
            break
    else:
        raise NumericalError(f"Newton iteration for {n} Gauss-Hermite nodes did not converge")
    _, p_prev = _normalized_hermite_pair(n, x)
    w = 1.0 / (n * p_prev**2)
    x = 0.5 * (x - x[::-1])  # exact symmetry
    w = 0.5 * (w + w[::-1])
    return x, w / w.sum()


def _normalized_hermite_pair(n, x):
    """(He_n / sqrt(n!), He_{n-1} / sqrt((n-1)!)) at x."""
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for k in range(n):
        prev, cur = cur, (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)
    return cur, prev


def tensor_gauss_hermite(n_per_var):
    """Tensor-product Gauss-Hermite grid, returns ``(nodes (S, N), weights (S,))``."""
    rules = [gauss_hermite_nodes(int(n)) for n in n_per_var]
    nodes = np.array(list(itertools.product(*[r[0] for r in rules])))
    weights = np.array([math.prod(c) for c in itertools.product(*[r[1] for r in rules])])
    return nodes, weights

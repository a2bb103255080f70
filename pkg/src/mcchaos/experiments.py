"""Study cases with closed-form solutions, error norms and error-table drivers."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import chaos_basis as cb
from .errors import InvalidArgument, McChaosError, NumericalError, UnsupportedBasis
from .kron_operator import (
    ChaosSolution,
    KroneckerChaosOperator,
    assemble_operator,
    assemble_rhs,
    mean_field,
    project_loads,
    sample_loads,
    sample_stiffness,
)
from .krylov import solve
from .mesh_fem import (
    Mesh1D,
    TridiagonalMatrix,
    assemble_mass,
    build_mesh,
    solve_deterministic,
    unit_stiffness,
)
from .random_field import (
    CoefficientModel,
    ForcingModel,
    SampleSet,
    draw_samples,
    log_affine,
)

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("case", "n", "S", "seed", "eps_h1", "eps_l2", "mc_error", "cg_iters")

# How the row label n of the published tables maps to a total degree.  The
# one-variable tables count basis terms (n terms = degree n - 1); the
# two-variable table starts at n = 0 and counts degree.
TABLE_CONVENTION = {"case1": "terms", "case2": "degree"}


@dataclass(frozen=True)
class StudyCase:
    name: str
    model: CoefficientModel
    forcing: ForcingModel
    exact_mean: Callable
    exact_solution: Callable
    amplitudes: tuple  # the log-coefficient profiles a_i

    @property
    def n_vars(self) -> int:
        return self.model.n_vars

    def exact_coefficient(self, alpha, x):
        """Hermite coefficient of the exact solution for multi-index ``alpha``.

        Uses exp(-a y) = exp(a^2 / 2) sum_k He_k(y) (-a)^k / k! per variable.
        """
        x = np.asarray(x, dtype=float)
        out = self.exact_mean(x)
        for a, k in zip(self.amplitudes, alpha):
            out = out * (-a(x)) ** k / math.factorial(k)
        return out


def _bubble(x):
    return x * (1.0 - x) / 2.0


def case1_model() -> StudyCase:
    """kappa = exp(sin(x) y), exact u = x(1 - x)/2 exp(-sin(x) y)."""

    def g(x):
        return (1 - 2 * x) * np.cos(x) / 2 - x * (1 - x) * np.sin(x) / 2

    def forcing(x, y):
        return 1.0 + g(x) * y[0]

    def exact(x, y):
        return _bubble(x) * np.exp(-np.sin(x) * y[0])

    def mean(x):
        return _bubble(x) * np.exp(np.sin(x) ** 2 / 2)

    return StudyCase("case1", log_affine(np.sin), ForcingModel(forcing, 1), mean, exact, (np.sin,))


def case2_model() -> StudyCase:
    """kappa = exp(sin(x) y1 + cos(x) y2), exact u = x(1 - x)/2 exp(-sin(x) y1 - cos(x) y2)."""

    def g1(x):
        return (1 - 2 * x) * np.cos(x) / 2 - x * (1 - x) * np.sin(x) / 2

    def g2(x):
        return (1 - 2 * x) * np.sin(x) / 2 + x * (1 - x) * np.cos(x) / 2

    def forcing(x, y):
        return 1.0 + g1(x) * y[0] - g2(x) * y[1]

    def exact(x, y):
        return _bubble(x) * np.exp(-np.sin(x) * y[0] - np.cos(x) * y[1])

    def mean(x):
        # sin^2 + cos^2 = 1
        return _bubble(x) * np.exp(0.5) * np.ones_like(np.asarray(x, dtype=float))

    return StudyCase("case2", log_affine(np.sin, np.cos), ForcingModel(forcing, 2), mean, exact,
                     (np.sin, np.cos))


CASES = {"case1": case1_model, "case2": case2_model}


def get_case(name: str) -> StudyCase:
    try:
        return CASES[name]()
    except KeyError:
        raise InvalidArgument(f"unknown case {name!r}; expected one of {sorted(CASES)}") from None


def error_h1(exact_nodes, approx, stiffness_unit: TridiagonalMatrix) -> float:
    """Discrete energy norm sqrt(d^T A d) with the unit-coefficient stiffness A."""
    return _discrete_norm(exact_nodes, approx, stiffness_unit)


def error_l2(exact_nodes, approx, mass: TridiagonalMatrix) -> float:
    return _discrete_norm(exact_nodes, approx, mass)


def _discrete_norm(exact_nodes, approx, matrix):
    d = np.asarray(exact_nodes, dtype=float) - np.asarray(approx, dtype=float)
    if d.shape != matrix.diag.shape:
        raise InvalidArgument(f"vector of length {d.shape} does not match matrix {matrix.shape}")
    return math.sqrt(max(matrix.quadratic_form(d), 0.0))


def per_sample_solutions(diag, off, loads) -> np.ndarray:
    """Independent deterministic solves, one per sample row."""
    return np.array([solve_deterministic(TridiagonalMatrix(d, o), f)
                     for d, o, f in zip(diag, off, loads)])


def classical_mc_mean(mesh: Mesh1D, model: CoefficientModel, forcing: ForcingModel,
                      samples: SampleSet) -> np.ndarray:
    diag, off = sample_stiffness(mesh, samples, model)
    loads = sample_loads(mesh, samples, forcing)
    return per_sample_solutions(diag, off, loads).mean(axis=0)


@dataclass
class ExperimentConfig:
    case: str = "case1"
    n_elements: int = 100
    degrees: tuple = (1, 2, 3, 4, 5, 6)
    sample_counts: tuple = (100, 500, 1000, 5000, 10000)
    seeds: tuple = (1,)
    degree_convention: str | None = None
    norms: tuple = ("h1", "l2")
    tol: float = 1e-10
    max_iter: int | None = None
    preconditioner: str | None = None
    low_memory: bool = False
    samples_file: str | None = None
    orthonormal: bool = True

    def __post_init__(self):
        self.degrees = tuple(int(d) for d in self.degrees)
        self.sample_counts = tuple(int(s) for s in self.sample_counts)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.norms = tuple(self.norms)
        if self.case not in CASES:
            raise InvalidArgument(f"case: unknown case {self.case!r}")
        if not self.degrees:
            raise InvalidArgument("degrees: list must not be empty")
        if min(self.degrees) < 0:
            raise InvalidArgument("degrees: values must be >= 0")
        if not self.sample_counts or min(self.sample_counts) < 1:
            raise InvalidArgument("sample_counts: need at least one value, all >= 1")
        if not self.seeds and self.samples_file is None:
            raise InvalidArgument("seeds: need at least one seed")
        if self.n_elements < 2:
            raise InvalidArgument("n_elements: must be >= 2")
        if self.convention not in ("terms", "degree"):
            raise InvalidArgument(f"degree_convention: expected 'terms' or 'degree', got {self.convention!r}")
        if self.convention == "terms" and min(self.degrees) < 1:
            raise InvalidArgument("degrees: with the 'terms' convention n counts basis terms and must be >= 1")
        if self.convention == "terms" and get_case(self.case).n_vars != 1:
            raise InvalidArgument("degree_convention: 'terms' is only defined for one random variable")
        if set(self.norms) - {"h1", "l2"}:
            raise InvalidArgument(f"norms: unknown entries {sorted(set(self.norms) - {'h1', 'l2'})}")

    @property
    def convention(self) -> str:
        return self.degree_convention or TABLE_CONVENTION[self.case]

    def total_degree(self, n: int) -> int:
        return n - 1 if self.convention == "terms" else n


@dataclass
class Cell:
    case: str
    n: object
    S: int
    seed: object
    eps_h1: float | None = None
    eps_l2: float | None = None
    mc_error: float | None = None
    cg_iters: int | None = None
    degree: int | None = None
    converged: bool | None = None
    gram_condition: float | None = None
    failure: str | None = None
    seconds: float = 0.0


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ErrorReport:
    config: ExperimentConfig
    cells: list = field(default_factory=list)

    def chaos_cells(self):
        return [c for c in self.cells if c.n != "mc"]

    def mc_cells(self):
        return [c for c in self.cells if c.n == "mc"]

    def lookup(self, n, S, seed) -> Cell:
        for c in self.cells:
            if c.n == n and c.S == S and c.seed == seed:
                return c
        raise KeyError((n, S, seed))

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for c in self.cells:
                w.writerow([_fmt(getattr(c, k)) for k in REPORT_COLUMNS])

    def median_table(self, norm: str = "h1"):
        """Published-table layout: rows n then 'Error MC', columns S, seed-median values."""
        key = "eps_h1" if norm == "h1" else "eps_l2"
        rows = []
        for n in list(self.config.degrees) + ["mc"]:
            row = []
            for S in self.config.sample_counts:
                vals = [getattr(c, key) for c in self.cells
                        if c.n == n and c.S == S and getattr(c, key) is not None]
                row.append(float(np.median(vals)) if vals else None)
            rows.append((n, row))
        return rows

    def write_table_csv(self, path, norm: str = "h1") -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n"] + [str(s) for s in self.config.sample_counts])
            for n, row in self.median_table(norm):
                w.writerow(["Error MC" if n == "mc" else str(n)] + [_fmt(v) for v in row])


def _samples_for(config: ExperimentConfig, seed, n_vars: int, s_max: int, loaded: SampleSet | None):
    if loaded is not None:
        if loaded.n_vars != n_vars:
            raise InvalidArgument(f"samples file has {loaded.n_vars} variables, case needs {n_vars}")
        return loaded.head(s_max)
    return draw_samples(seed, s_max, n_vars)


def run_table(config: ExperimentConfig, samples: SampleSet | None = None) -> ErrorReport:
    """Evaluate every (n, S, seed) cell plus the classical Monte Carlo baseline.

    With ``samples`` given (a loaded file), the seed axis collapses to one
    pass labelled ``file`` and each S uses the first S rows.
    """
    case = get_case(config.case)
    mesh = build_mesh(config.n_elements)
    a_unit, mass = unit_stiffness(mesh), assemble_mass(mesh)
    exact = case.exact_mean(mesh.interior_nodes)
    report = ErrorReport(config)
    seeds = ("file",) if samples is not None else config.seeds
    s_max = max(config.sample_counts)

    for seed in seeds:
        pool = _samples_for(config, seed, case.n_vars, s_max, samples)
        for S in config.sample_counts:
            t0 = time.perf_counter()
            sub = pool.head(S)
            weights = np.full(S, 1.0 / S)
            diag, off = sample_stiffness(mesh, sub, case.model)
            loads = sample_loads(mesh, sub, case.forcing)
            mc = Cell(case.name, "mc", S, seed, cg_iters=0)
            try:
                u_mc = per_sample_solutions(diag, off, loads).mean(axis=0)
                mc.eps_h1 = error_h1(exact, u_mc, a_unit)
                mc.eps_l2 = error_l2(exact, u_mc, mass)
                mc.mc_error = mc.eps_h1
            except McChaosError as exc:
                mc.failure = f"{exc.kind}: {exc}"
            mc.seconds = time.perf_counter() - t0
            for n in config.degrees:
                t0 = time.perf_counter()
                cell = Cell(case.name, n, S, seed, mc_error=mc.eps_h1,
                            degree=config.total_degree(n))
                try:
                    basis = cb.hermite_basis(case.n_vars, cell.degree, orthonormal=config.orthonormal)
                    z = cb.eval_matrix(basis, sub)
                    if config.low_memory:
                        op = KroneckerChaosOperator(z=z, weights=weights, mesh=mesh, basis=basis,
                                                    model=case.model, sample_values=np.array(sub.values))
                    else:
                        op = KroneckerChaosOperator(z=z, weights=weights, diag=diag, off=off,
                                                    mesh=mesh, basis=basis)
                    sol = solve(op, project_loads(loads, z, weights), tol=config.tol,
                                max_iter=config.max_iter, preconditioner=config.preconditioner)
                    rep = sol.report
                    cell.cg_iters = rep.iterations
                    cell.converged = rep.converged
                    cell.gram_condition = rep.gram_condition
                    if rep.converged:
                        mean = mean_field(sol)
                        if "h1" in config.norms:
                            cell.eps_h1 = error_h1(exact, mean, a_unit)
                        if "l2" in config.norms:
                            cell.eps_l2 = error_l2(exact, mean, mass)
                    else:
                        cell.failure = f"{rep.breakdown_reason}: {rep.message}"
                except McChaosError as exc:
                    cell.failure = f"{exc.kind}: {exc}"
                cell.seconds = time.perf_counter() - t0
                if cell.failure:
                    log.warning("cell n=%s S=%s seed=%s failed: %s", n, S, seed, cell.failure)
                report.cells.append(cell)
            report.cells.append(mc)
    return report


def solve_case(case: StudyCase, n_elements: int, degree: int, samples: SampleSet,
               tol: float = 1e-10, max_iter=None, preconditioner=None,
               low_memory: bool = False, orthonormal: bool = True) -> ChaosSolution:
    """Hermite total-degree chaos solve for one study case and one sample set.

    With ``orthonormal`` the system is solved in the unit-variance basis
    He_alpha / sqrt(alpha!), whose Gram matrix is far better conditioned, and
    the coefficients are converted back: the returned solution always refers
    to the plain He_alpha basis.
    """
    mesh = build_mesh(n_elements)
    basis = cb.hermite_basis(case.n_vars, degree, orthonormal=orthonormal)
    op = assemble_operator(mesh, basis, samples, case.model, low_memory=low_memory)
    rhs = assemble_rhs(mesh, basis, samples, case.forcing, z=op.z)
    sol = solve(op, rhs, tol=tol, max_iter=max_iter, preconditioner=preconditioner)
    if not orthonormal:
        return sol
    plain = cb.hermite_basis(case.n_vars, degree)
    coefficients = sol.coefficients / np.sqrt(plain.norms_squared())[:, None]
    return ChaosSolution(coefficients, mesh=mesh, basis=plain, report=sol.report)


@dataclass
class CoefficientCurves:
    case: str
    degree: int
    seed: int
    x: np.ndarray
    indices: tuple
    blocks: dict  # S -> (4, N_dof) array
    exact: np.ndarray  # (4, N_dof)
    reports: dict = field(default_factory=dict)

    def write_csv(self, path, S) -> None:
        data = self.blocks[S]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x"] + [f"block{j}" for j in range(data.shape[0])])
            for i, xi in enumerate(self.x):
                w.writerow([repr(float(xi))] + [repr(float(v)) for v in data[:, i]])


def coefficient_convergence(case_name: str, degree: int, sample_counts, seed: int,
                            n_elements: int = 100, tol: float = 1e-10,
                            preconditioner=None) -> CoefficientCurves:
    """The first four chaos coefficients for a growing number of samples."""
    case = get_case(case_name)
    basis = cb.hermite_basis(case.n_vars, degree)
    if basis.size < 4:
        raise InvalidArgument(f"degree {degree} gives only {basis.size} coefficients; need 4")
    mesh = build_mesh(n_elements)
    x = mesh.interior_nodes
    pool = draw_samples(seed, max(sample_counts), case.n_vars)
    blocks, reports = {}, {}
    for S in sample_counts:
        sol = solve_case(case, n_elements, degree, pool.head(S), tol=tol,
                         preconditioner=preconditioner)
        if not sol.report.converged:
            raise NumericalError(f"S={S}: {sol.report.message}")
        blocks[S] = sol.coefficients[:4].copy()
        reports[S] = sol.report
    exact = np.array([case.exact_coefficient(a, x) for a in basis.indices[:4]])
    return CoefficientCurves(case.name, degree, seed, x, basis.indices[:4], blocks, exact, reports)


@dataclass
class CompareRow:
    mode: str
    nodes: int
    degree: int | None
    eps_h1: float
    eps_l2: float
    cg_iters: int
    diagnostic_name: str
    diagnostic: float


COMPARE_COLUMNS = tuple(f for f in CompareRow.__dataclass_fields__)


def compare_modes(case_name: str = "case1", n_elements: int = 100, collocation_nodes: int = 5,
                  mc_samples: int = 5, chaos_degree: int = 4, chaos_samples: int = 1000,
                  seed: int = 1, tol: float = 1e-10, collocation_basis: str = "hermite"):
    """Classical MC, Gauss-Hermite collocation and MC-assembled chaos on one case."""
    case = get_case(case_name)
    mesh = build_mesh(n_elements)
    a_unit, mass = unit_stiffness(mesh), assemble_mass(mesh)
    exact = case.exact_mean(mesh.interior_nodes)
    rows = []

    # classical MC, checked against the Kronecker path with Z = I
    samples = draw_samples(seed, mc_samples, case.n_vars)
    diag, off = sample_stiffness(mesh, samples, case.model)
    loads = sample_loads(mesh, samples, case.forcing)
    u_mc = per_sample_solutions(diag, off, loads).mean(axis=0)
    w = np.full(mc_samples, 1.0 / mc_samples)
    if case.n_vars == 1:
        basis = cb.lagrange_basis(samples.values)
        z = cb.eval_matrix(basis, samples)
    else:
        basis, z = None, np.eye(mc_samples)
    op = KroneckerChaosOperator(z=z, weights=w, diag=diag, off=off, mesh=mesh, basis=basis)
    sol = solve(op, project_loads(loads, z, w), tol=tol)
    u_kron = w @ sol.coefficients
    agreement = float(np.max(np.abs(u_kron - u_mc)) / np.max(np.abs(u_mc)))
    rows.append(CompareRow("mc", mc_samples, None, error_h1(exact, u_mc, a_unit),
                           error_l2(exact, u_mc, mass), sol.report.iterations,
                           "identity_z_rel_diff", agreement))

    # Gauss-Hermite collocation with quadrature weights
    if collocation_basis != "hermite" or case.n_vars > 2:
        raise UnsupportedBasis(f"collocation needs a Hermite basis in at most two variables, "
                               f"got {collocation_basis!r} with {case.n_vars} variables")
    q = collocation_nodes
    nodes, weights = cb.tensor_gauss_hermite([q] * case.n_vars)
    basis = cb.tensor_hermite_basis([q - 1] * case.n_vars)
    gh = SampleSet(nodes, distribution="gauss_hermite")
    z = cb.eval_matrix(basis, gh)
    diag, off = sample_stiffness(mesh, gh, case.model)
    op = KroneckerChaosOperator(z=z, weights=weights, diag=diag, off=off, mesh=mesh, basis=basis)
    sol = solve(op, project_loads(sample_loads(mesh, gh, case.forcing), z, weights), tol=tol)
    _require_converged(sol, "collocation")
    gram_dev = float(np.max(np.abs(op.gram() - np.diag(basis.norms_squared()))))
    u = mean_field(sol)
    rows.append(CompareRow("collocation", len(weights), q - 1, error_h1(exact, u, a_unit),
                           error_l2(exact, u, mass), sol.report.iterations,
                           "gram_deviation", gram_dev))

    samples = draw_samples(seed, chaos_samples, case.n_vars)
    sol = solve_case(case, n_elements, chaos_degree, samples, tol=tol)
    _require_converged(sol, "chaos-mc")
    u = mean_field(sol)
    rows.append(CompareRow("chaos-mc", chaos_samples, chaos_degree, error_h1(exact, u, a_unit),
                           error_l2(exact, u, mass), sol.report.iterations,
                           "gram_condition", sol.report.gram_condition))
    return rows


def _require_converged(sol, what):
    if not sol.report.converged:
        raise NumericalError(f"{what}: {sol.report.message}")


def write_compare_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_COLUMNS)
        for row in rows:
            w.writerow([_fmt(v) for v in asdict(row).values()])

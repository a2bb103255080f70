"""Polynomial chaos Galerkin FEM for random elliptic problems with Monte Carlo assembled expectations."""

__version__ = "0.1.0"

from .chaos_basis import (  # noqa: E402
    ChaosBasis,
    basis_eval,
    eval_matrix,
    gauss_hermite_nodes,
    hermite_basis,
    hermite_eval,
    lagrange_basis,
    tensor_hermite_basis,
    total_degree_index_set,
)
from .kron_operator import (  # noqa: E402
    ChaosSolution,
    KroneckerChaosOperator,
    assemble_operator,
    assemble_rhs,
    mean_field,
    operator_from_matrices,
)
from .krylov import SolverReport, conjugate_gradient, solve  # noqa: E402
from .mesh_fem import (  # noqa: E402
    Mesh1D,
    TridiagonalMatrix,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    build_mesh,
    solve_deterministic,
)
from .random_field import (  # noqa: E402
    CoefficientModel,
    ForcingModel,
    SampleSet,
    draw_samples,
    kappa_eval,
    load_samples,
    log_affine,
    save_samples,
    support_elements,
)

__all__ = [
    "ChaosBasis",
    "ChaosSolution",
    "CoefficientModel",
    "ForcingModel",
    "KroneckerChaosOperator",
    "Mesh1D",
    "SampleSet",
    "SolverReport",
    "TridiagonalMatrix",
    "assemble_load",
    "assemble_mass",
    "assemble_operator",
    "assemble_rhs",
    "assemble_stiffness",
    "basis_eval",
    "build_mesh",
    "conjugate_gradient",
    "draw_samples",
    "eval_matrix",
    "gauss_hermite_nodes",
    "hermite_basis",
    "hermite_eval",
    "kappa_eval",
    "lagrange_basis",
    "load_samples",
    "log_affine",
    "mean_field",
    "operator_from_matrices",
    "save_samples",
    "solve",
    "solve_deterministic",
    "support_elements",
    "tensor_hermite_basis",
    "total_degree_index_set",
]

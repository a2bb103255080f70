"""Conjugate gradients for the matrix-free chaos system."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .kron_operator import ChaosSolution

log = logging.getLogger(__name__)

SEMIDEFINITE_HINT = ("operator is only positive semidefinite; the evaluation matrix Z lacks full "
                     "column rank (check S >= N2 and that the samples are distinct)")


@dataclass
class SolverReport:
    iterations: int
    final_relative_residual: float
    converged: bool
    breakdown_reason: str | None = None
    message: str = ""
    gram_condition: float | None = None
    residual_history: list = field(default_factory=list, repr=False)


def _as_operator(op):
    if hasattr(op, "apply"):
        return op.apply
    if callable(op):
        return op
    return lambda v: op @ v


def conjugate_gradient(op, rhs, tol: float = 1e-10, max_iter: int | None = None,
                       preconditioner=None, x0=None, callback=None):
    """Solve ``op x = rhs``; returns ``(x, SolverReport)``.

    Convergence is ``||rhs - op x|| <= tol ||rhs||`` in the 2-norm.  On
    nonconvergence the iterate with the smallest residual is returned.
    Operators exposing ``rank_deficient()`` are checked before iterating.
    """
    if not 0.0 < tol < 1.0:
        raise InvalidArgument(f"tolerance must lie in (0, 1), got {tol}")
    b = np.asarray(rhs, dtype=float)
    matvec = _as_operator(op)
    if max_iter is None:
        max_iter = 10 * b.size

    if hasattr(op, "rank_deficient") and op.rank_deficient():
        return np.zeros_like(b), SolverReport(0, 1.0, False, "semidefinite", SEMIDEFINITE_HINT)

    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), SolverReport(0, 0.0, True)

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x) if x0 is not None else b.copy()
    z = preconditioner(r) if preconditioner else r
    p = z.copy()
    rz = float(np.vdot(r, z))
    rel = float(np.linalg.norm(r)) / bnorm
    history = [rel]
    best_x, best_rel = x.copy(), rel
    it = 0
    while rel > tol and it < max_iter:
        ap = matvec(p)
        pap = float(np.vdot(p, ap))
        if not pap > 0.0:
            reason = "semidefinite" if pap == 0.0 else "indefinite"
            msg = f"p^T A p = {pap:.3e} at iteration {it}; {SEMIDEFINITE_HINT}"
            log.warning(msg)
            return best_x, SolverReport(it, best_rel, False, reason, msg, residual_history=history)
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        it += 1
        rel = float(np.linalg.norm(r)) / bnorm
        history.append(rel)
        if callback is not None:
            callback(x)
        if rel < best_rel:
            best_rel = rel
            best_x = x.copy()
        z = preconditioner(r) if preconditioner else r
        rz_new = float(np.vdot(r, z))
        p *= rz_new / rz
        p += z
        rz = rz_new

    if rel <= tol:
        return x, SolverReport(it, rel, True, residual_history=history)
    msg = f"no convergence after {it} iterations (relative residual {best_rel:.3e} > {tol:.1e})"
    return best_x, SolverReport(it, best_rel, False, "max_iter", msg, residual_history=history)


def solve(op, rhs, tol: float = 1e-10, max_iter: int | None = None,
          preconditioner: str | None = None) -> ChaosSolution:
    """CG solve of a KroneckerChaosOperator system, wrapped as a ChaosSolution.

    ``preconditioner="mean"`` selects the block-diagonal mean-stiffness
    preconditioner; the default is plain CG.
    """
    if preconditioner in (None, "none"):
        prec = None
    elif preconditioner == "mean":
        prec = op.mean_block_preconditioner()
    else:
        raise InvalidArgument(f"unknown preconditioner {preconditioner!r}")
    x, report = conjugate_gradient(op, rhs, tol=tol, max_iter=max_iter, preconditioner=prec)
    report.gram_condition = op.gram_condition()
    return ChaosSolution(x, mesh=op.mesh, basis=op.basis, report=report)

"""Newton iteration with a sparse direct linear solver."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import Assembler, SystemState
from .constitutive import StressLaw
from .fespace import MixedSpace, apply_dirichlet, BasisTable
from .manufactured import ExactSolution

__all__ = [
    "NewtonConfig",
    "SolveReport",
    "LinearSolveError",
    "SparseSystem",
    "linear_solve",
    "newton_iterate",
    "newton_solve",
    "continuation_path",
]

log = logging.getLogger(__name__)


class LinearSolveError(RuntimeError):
    """Raised when the sparse factorization fails (e.g. a singular saddle point)."""


@dataclass
class NewtonConfig:
    """Newton stopping rule, globalization and continuation settings.

    A state counts as converged once ``|R| <= tol_abs``. The relative test
    ``|R| <= tol_rel |R_0|`` is honoured only with ``require_abs=False``: the
    zero-interior initial guess produces huge initial residuals under
    p-growth, which would make the relative test stop Newton in its linear
    phase.
    """

    tol_abs: float = 1e-8
    tol_rel: float = 1e-10
    max_iter: int = 50
    damping: bool = False
    max_halvings: int = 10
    continuation_steps: list[float] = field(default_factory=list)
    auto_continuation: bool = True
    continuation_start: float = 2.0
    continuation_step: float = 0.25
    require_abs: bool = True

    def __post_init__(self):
        if not (self.tol_abs > 0 and self.tol_rel > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    converged: bool = False
    continuation: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual_history": list(self.residual_history),
            "converged": self.converged,
            "continuation": list(self.continuation),
        }


@dataclass
class SparseSystem:
    """Sparse matrix with right-hand side.

    ``border`` optionally describes a zero-mean pressure multiplier as
    ``(pressure_slice, multiplier_index)``; the linear solver then eliminates
    the dense multiplier row and column exactly instead of factorizing them.
    """

    matrix: sp.spmatrix
    rhs: np.ndarray
    border: tuple | None = None


def _lu(A):
    try:
        return spla.splu(sp.csc_matrix(A), permc_spec="COLAMD")
    except RuntimeError as exc:
        raise LinearSolveError(str(exc)) from exc


def _bordered_solve(A, b, pslice, mult):
    # The multiplier couples only to pressure rows through the mass vector m
    # and every velocity correction vanishes on the boundary, so summing the
    # continuity rows gives lam = sum(g) / sum(m). The remaining system is
    # singular only in the constant pressure mode: pin one pressure dof,
    # solve, then shift the pressure to meet the constraint row.
    A = sp.csr_matrix(A)
    m = A[pslice, mult].toarray().ravel()
    if not np.any(m):
        raise LinearSolveError("multiplier column is empty")
    g = b[pslice]
    lam = g.sum() / m.sum()
    pin = pslice.start
    keep = np.ones(A.shape[0], dtype=bool)
    keep[[pin, mult]] = False
    idx = np.flatnonzero(keep)
    rhs = b.copy()
    rhs[pslice] -= lam * m
    x = np.zeros_like(b)
    x[idx] = _lu(A[idx][:, idx]).solve(rhs[idx])
    x[mult] = lam
    x[pslice] += (b[mult] - m @ x[pslice]) / m.sum()
    return x


def linear_solve(system, rhs=None, rtol: float = 1e-11) -> np.ndarray:
    """Solve ``A x = b`` by sparse LU with partial pivoting.

    Accepts a :class:`SparseSystem` or ``(matrix, rhs)``. Iterative
    refinement steps are applied while the relative residual exceeds ``rtol``.
    """
    if isinstance(system, SparseSystem):
        A, b, border = system.matrix, system.rhs, system.border
    else:
        A, b, border = system, rhs, None
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != len(b):
        raise ValueError("matrix must be square and match the right-hand side")
    if border is not None:
        solve = lambda r: _bordered_solve(A, r, *border)
    else:
        lu = _lu(A)
        solve = lu.solve
    x = solve(b)
    if not np.all(np.isfinite(x)):
        raise LinearSolveError("factorization produced non-finite values")
    bnorm = np.linalg.norm(b)
    for _ in range(3):
        r = b - A @ x
        if np.linalg.norm(r) <= rtol * bnorm:
            break
        x = x + solve(r)
    return x


def newton_iterate(assembler: Assembler, x0: np.ndarray, load: np.ndarray, config: NewtonConfig):
    """Plain (optionally damped) Newton loop from ``x0``; returns ``(x, report)``."""
    x = x0.copy()
    R = assembler.residual(x, load)
    r0 = np.linalg.norm(R)
    report = SolveReport(residual_history=[float(r0)])
    tol = max(config.tol_abs, 0.0)
    if r0 <= tol:
        report.converged = True
        return x, report
    r = r0
    for it in range(1, config.max_iter + 1):
        J = assembler.jacobian(x)
        dx = linear_solve(SparseSystem(J, -R, assembler.border))
        step = 1.0
        x_new = x + dx
        R_new = assembler.residual(x_new, load)
        r_new = np.linalg.norm(R_new)
        if config.damping:
            halvings = 0
            while not (r_new < r) and halvings < config.max_halvings:
                step *= 0.5
                halvings += 1
                x_new = x + step * dx
                R_new = assembler.residual(x_new, load)
                r_new = np.linalg.norm(R_new)
        x, R, r = x_new, R_new, r_new
        report.iterations = it
        report.residual_history.append(float(r))
        log.debug("newton it=%d |R|=%.3e step=%.3g", it, r, step)
        if not np.isfinite(r):
            return x, report
        if r <= config.tol_abs or (not config.require_abs and r <= config.tol_rel * r0):
            report.converged = True
            return x, report
    return x, report


def continuation_path(p_target: float, config: NewtonConfig) -> list[float]:
    if config.continuation_steps:
        path = [p for p in config.continuation_steps if p < p_target]
    else:
        path = list(np.arange(config.continuation_start, p_target - 1e-12, config.continuation_step))
    return [float(p) for p in path] + [float(p_target)]


def initial_guess(space: MixedSpace, exact: ExactSolution | None) -> np.ndarray:
    """Dirichlet interpolant in the velocity, zero elsewhere."""
    x = np.zeros(space.n_total)
    fixed, values, _ = apply_dirichlet(space, None if exact is None else exact.velocity)
    x[fixed] = values
    return x


def newton_solve(
    space: MixedSpace,
    law: StressLaw,
    exact: ExactSolution | None,
    config: NewtonConfig | None = None,
    *,
    table: BasisTable | None = None,
    convection: bool = True,
    load=None,
    x0: np.ndarray | None = None,
):
    """Solve the discrete system for the manufactured data of ``exact``.

    ``load`` overrides the load functional: either a vector or a callable
    ``law -> vector`` (needed so each continuation step gets consistent data).
    ``exact=None`` means zero data with homogeneous boundary values.
    Returns ``(SystemState, SolveReport)``.
    """
    config = config or NewtonConfig()
    base = Assembler(space, law, table, convection)

    def load_for(lw):
        if load is None:
            return base.with_law(lw).load_weak(exact) if exact is not None else np.zeros(space.n_total)
        return load(lw) if callable(load) else np.asarray(load)

    start = initial_guess(space, exact) if x0 is None else np.asarray(x0, dtype=float).copy()

    if config.continuation_steps:
        path = continuation_path(law.p, config)
    else:
        x, report = newton_iterate(base, start, load_for(law), config)
        if report.converged or not config.auto_continuation or law.p <= config.continuation_start:
            return SystemState.from_vector(space, x), report
        log.info("undamped Newton failed for p=%g; switching to continuation", law.p)
        path = continuation_path(law.p, config)

    total = SolveReport(continuation=path)
    x = start
    step_config = NewtonConfig(
        config.tol_abs, config.tol_rel, config.max_iter, True, config.max_halvings, [], False,
        require_abs=config.require_abs,
    )
    for p in path:
        lw = law.with_p(p)
        x, rep = newton_iterate(base.with_law(lw), x, load_for(lw), step_config)
        total.iterations += rep.iterations
        total.residual_history.extend(rep.residual_history)
        if not rep.converged:
            log.warning("continuation step p=%g did not converge", p)
            return SystemState.from_vector(space, x), total
    total.converged = True
    return SystemState.from_vector(space, x), total

"""Sparse Gauss-Newton driver for weighted residual minimization.

Each iteration linearizes the residual, solves the weighted normal
equations (J^T G^{-1} J) delta = -J^T G^{-1} R by a sparse direct
factorization, and applies Levenberg damping H + mu*I whenever the
undamped system is singular or the step fails to decrease the loss.
"""

import logging
import time
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .assembly import assemble
from .gram import apply_inverse, robust_loss

log = logging.getLogger("splinecolloc.solver")

# undamped solves above this 1-norm condition estimate are treated as singular
COND_LIMIT = 1e14
DAMPING_EXHAUSTED = 1e12
DENSE_GRAM_LIMIT = 20000


class SolverError(RuntimeError):
    pass


class SingularSystemError(SolverError):
    pass


@dataclass(frozen=True)
class GNConfig:
    max_iterations: int = 50
    step_tolerance: float = 1e-10
    loss_tolerance: float = 1e-24
    damping_initial: float = 1e-8
    damping_growth: float = 10.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_tolerance <= 0 or self.loss_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.damping_initial < 0:
            raise ValueError("damping_initial must be >= 0")
        if self.damping_growth <= 1:
            raise ValueError("damping_growth must be > 1")


@dataclass
class GNReport:
    iterations_used: int = 0
    loss_history: list = dc_field(default_factory=list)
    step_norm_history: list = dc_field(default_factory=list)
    wall_seconds: float = 0.0
    damping_events: int = 0
    converged: bool = False
    initial_loss: float = np.nan


def solve_linear_normal_equations(J, R, gram, mu=0.0):
    """Solve (J^T G^{-1} J + mu I) delta = -J^T G^{-1} R.

    Raises SingularSystemError when mu == 0 and the Hessian approximation
    is (numerically) singular; callers retry with damping.
    """
    if mu < 0:
        raise ValueError("damping must be nonnegative")
    if not np.all(np.isfinite(R)):
        raise SolverError("non-finite residual entries")
    n = J.shape[1]

    if gram.is_identity:
        H = (J.T @ J).tocsc()
        g = J.T @ R
    else:
        if max(J.shape) > DENSE_GRAM_LIMIT:
            raise SolverError(
                "non-identity gram weighting requires dense column solves; "
                f"system of shape {J.shape} is too large")
        YJ = apply_inverse(gram, np.asarray(J.todense()))
        H = scipy.sparse.csc_matrix(J.T @ YJ)
        g = J.T @ apply_inverse(gram, R)
    if mu > 0:
        H = H + mu * scipy.sparse.identity(n, format="csc")
    elif np.any(H.diagonal() == 0.0):
        raise SingularSystemError("zero diagonal in normal equations")

    try:
        lu = scipy.sparse.linalg.splu(H)
    except RuntimeError as exc:
        raise SingularSystemError(str(exc)) from exc

    if mu == 0.0:
        # reject numerically rank-deficient systems: their factorizations
        # succeed but inject arbitrary null-space components into delta
        norm_H = scipy.sparse.linalg.onenormest(H)
        # H is symmetric, so the adjoint solve is the same solve
        inv_op = scipy.sparse.linalg.LinearOperator((n, n), matvec=lu.solve,
                                                    rmatvec=lu.solve)
        norm_inv = scipy.sparse.linalg.onenormest(inv_op)
        if not np.isfinite(norm_inv) or norm_H * norm_inv > COND_LIMIT:
            raise SingularSystemError(
                f"condition estimate {norm_H * norm_inv:.2e} exceeds limit")

    delta = lu.solve(-np.asarray(g, dtype=float).ravel())
    if not np.all(np.isfinite(delta)):
        raise SingularSystemError("non-finite solution of normal equations")
    return delta


def _damping_scale(J):
    """Typical diagonal magnitude of J^T J, for relative damping."""
    colsq = np.asarray(J.multiply(J).sum(axis=0)).ravel()
    return max(float(colsq.mean()), 1.0)


def gauss_newton(problem, initial_field, colloc, dofs, gram, cfg=None):
    """Minimize the robust residual loss over interior spline coefficients.

    Returns (field, GNReport).  The iterate sequence is deterministic for
    identical inputs.
    """
    cfg = cfg or GNConfig()
    t0 = time.perf_counter()
    report = GNReport()

    field = initial_field
    system = assemble(problem, field, colloc, dofs)
    _check_finite(system)
    loss = robust_loss(gram, system.residual)
    report.initial_loss = loss
    scale = _damping_scale(system.jacobian)

    for k in range(1, cfg.max_iterations + 1):
        mu = 0.0
        while True:
            try:
                delta = solve_linear_normal_equations(
                    system.jacobian, system.residual, gram, mu * scale)
            except SingularSystemError:
                accepted = False
                trial = None
            else:
                step_norm = float(np.max(np.abs(delta))) if len(delta) else 0.0
                if step_norm <= cfg.step_tolerance:
                    report.converged = True
                    report.wall_seconds = time.perf_counter() - t0
                    return field, report
                trial = _trial(problem, dofs, field, colloc, delta)
                trial_loss = robust_loss(gram, trial[1].residual)
                accepted = np.isfinite(trial_loss) and trial_loss <= loss * (1 + 1e-12) + 1e-300
            if accepted:
                break
            report.damping_events += 1
            mu = cfg.damping_initial if mu == 0.0 else mu * cfg.damping_growth
            if mu > DAMPING_EXHAUSTED:
                raise SolverError(
                    f"damping exhausted at iteration {k} (mu > {DAMPING_EXHAUSTED:.0e})")

        field, system = trial
        _check_finite(system)
        loss = trial_loss
        report.iterations_used = k
        report.loss_history.append(loss)
        report.step_norm_history.append(step_norm)
        log.info("iter %d | loss %.6e | step %.6e | damping %.6e",
                 k, loss, step_norm, mu * scale)
        if loss <= cfg.loss_tolerance:
            report.converged = True
            break

    report.wall_seconds = time.perf_counter() - t0
    return field, report


def newton_nonlinear(problem, initial_field, colloc, dofs, gram, cfg=None):
    """Nonlinear Newton-type iteration: re-linearized Gauss-Newton."""
    return gauss_newton(problem, initial_field, colloc, dofs, gram, cfg)


def _trial(problem, dofs, field, colloc, delta):
    z = dofs.interior_of(field) + delta
    trial_field = dofs.field_from_interior(z)
    return trial_field, assemble(problem, trial_field, colloc, dofs)


def _check_finite(system):
    if not np.all(np.isfinite(system.residual)):
        raise SolverError("non-finite residual encountered")
    if not np.all(np.isfinite(system.jacobian.data)):
        raise SolverError("non-finite Jacobian encountered")

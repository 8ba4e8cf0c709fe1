"""Joint state/parameter Gauss-Newton for inverse Helmholtz identification.

The unknown vector stacks the interior spline coefficients with the
frequency parameter kappa, which contributes a single dense Jacobian
column 2*kappa*u_c(x_k) on the PDE rows.  The normal equations are
solved in bordered form: sparse coefficient block first, then a 1x1
Schur complement for the kappa update.
"""

import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .assembly import assemble
from .basis import eval_basis
from .problems import PDEProblem
from .solver import (GNConfig, GNReport, SingularSystemError, SolverError,
                     _damping_scale)

KAPPA_DIVERGENCE = 1e3


@dataclass
class InverseState:
    """Current iterate of the joint (coefficients, kappa) optimization."""
    field: object
    kappa: float
    lambda_reg: float
    observations: np.ndarray
    observation_points: np.ndarray
    forcing: object  # fixed problem data, built from kappa_true

    def __post_init__(self):
        if self.lambda_reg <= 0:
            raise ValueError("regularization weight lambda must be positive")
        if len(self.observations) < 1:
            raise ValueError("need at least one observation")
        if not math.isfinite(self.kappa):
            raise ValueError("kappa must be finite")


@dataclass(frozen=True)
class AugmentedSystem:
    """Stacked [PDE residual; sqrt(lambda) misfit] system with kappa column."""
    residual: np.ndarray
    jacobian_coeff: scipy.sparse.csr_matrix   # sparse block, interior columns
    jacobian_kappa: np.ndarray                # dense final column


@dataclass
class InverseReport(GNReport):
    kappa_history: list = dc_field(default_factory=list)


def manufactured_solution(kappa_true):
    def u(pt):
        return math.sin(kappa_true * math.pi * pt[0]) * math.sin(kappa_true * math.pi * pt[1])
    return u


def make_forcing(kappa_true):
    """Forcing consistent with the kappa^2-reaction residual at kappa_true."""
    u = manufactured_solution(kappa_true)
    amp = 2.0 * (kappa_true * math.pi) ** 2 + kappa_true ** 2

    def f(pt):
        return amp * u(pt)
    return f


def synthesize_observations(kappa_true, obs_points):
    """Noiseless samples of the manufactured solution."""
    u = manufactured_solution(kappa_true)
    return np.array([u(pt) for pt in obs_points])


def _helmholtz_problem(kappa, forcing):
    return PDEProblem(
        "helmholtz_inverse", 2,
        linear_terms=[(-1.0, (2, 0)), (-1.0, (0, 2)), (kappa ** 2, (0, 0))],
        forcing=forcing, dirichlet=lambda pt: 0.0, forcing_sign=-1.0,
    )


def _observation_matrix(spaces, dofs, points):
    """sqrt-lambda-free misfit rows: u_c at observation points, interior cols."""
    shape = tuple(s.n_basis for s in spaces)
    rows, cols, vals = [], [], []
    for q, pt in enumerate(points):
        per = [eval_basis(s, x) for s, x in zip(spaces, pt)]
        prod = per[0][1]
        for fa, v in per[1:]:
            prod = np.multiply.outer(prod, v)
        grids = np.meshgrid(*[fa + np.arange(s.degree + 1)
                              for (fa, _), s in zip(per, spaces)], indexing="ij")
        flat = np.ravel_multi_index([g.ravel() for g in grids], shape)
        rows.extend([q] * len(flat))
        cols.extend(flat)
        vals.extend(prod.ravel())
    B = scipy.sparse.csr_matrix((vals, (rows, cols)),
                                shape=(len(points), int(np.prod(shape))))
    return B.tocsc()[:, dofs.interior_flat].tocsr()


def assemble_inverse(state, colloc, dofs):
    """Augmented residual/Jacobian at the current (field, kappa) iterate."""
    problem = _helmholtz_problem(state.kappa, state.forcing)
    pde = assemble(problem, state.field, colloc, dofs)

    u_at_colloc = _values_at(state.field, dofs, colloc.points)
    kappa_col_pde = 2.0 * state.kappa * u_at_colloc

    sqrt_lam = math.sqrt(state.lambda_reg)
    u_at_obs = _values_at(state.field, dofs, state.observation_points)
    misfit = sqrt_lam * (u_at_obs - state.observations)
    B = sqrt_lam * _observation_matrix(state.field.spaces, dofs,
                                       state.observation_points)

    residual = np.concatenate([pde.residual, misfit])
    jac_coeff = scipy.sparse.vstack([pde.jacobian, B], format="csr")
    jac_kappa = np.concatenate([kappa_col_pde, np.zeros(len(misfit))])
    return AugmentedSystem(residual=residual, jacobian_coeff=jac_coeff,
                           jacobian_kappa=jac_kappa)


def _values_at(field, dofs, points):
    from .basis import eval_field
    return np.array([eval_field(field, pt) for pt in points])


def _bordered_step(system, mu, scale):
    """Solve the damped normal equations of the bordered system.

    Sparse block first, then the 1x1 Schur complement for delta-kappa.
    """
    J = system.jacobian_coeff
    b = system.jacobian_kappa
    R = system.residual
    mu_abs = mu * scale

    A = (J.T @ J).tocsc()
    if mu_abs > 0:
        A = A + mu_abs * scipy.sparse.identity(J.shape[1], format="csc")
    try:
        lu = scipy.sparse.linalg.splu(A)
    except RuntimeError as exc:
        raise SingularSystemError(str(exc)) from exc

    Jt_b = J.T @ b
    Jt_R = J.T @ R
    x_b = lu.solve(Jt_b)
    x_R = lu.solve(Jt_R)
    d = float(b @ b) + mu_abs
    schur = d - float(Jt_b @ x_b)
    if schur <= 0 or not np.isfinite(schur):
        raise SingularSystemError("nonpositive Schur complement for kappa")
    g_kappa = float(b @ R)
    delta_kappa = -(g_kappa - float(Jt_b @ x_R)) / schur
    delta_c = -x_R - x_b * delta_kappa
    if not (np.all(np.isfinite(delta_c)) and np.isfinite(delta_kappa)):
        raise SingularSystemError("non-finite bordered solve")
    return delta_c, delta_kappa


def solve_inverse(kappa_init, kappa_true, lambda_reg, spaces, colloc,
                  cfg=None, observation_points=None):
    """Recover kappa (and the state) from noiseless observations.

    Observations default to the collocation grid; the driver is plain
    (unweighted) Gauss-Newton with Levenberg damping on rejected steps.
    """
    if kappa_init <= 0:
        raise ValueError("kappa_init must be positive")
    cfg = cfg or GNConfig(max_iterations=100)
    t0 = time.perf_counter()

    forcing = make_forcing(kappa_true)
    if observation_points is None:
        observation_points = colloc.points
    observations = synthesize_observations(kappa_true, observation_points)

    problem0 = _helmholtz_problem(kappa_init, forcing)
    from .assembly import apply_dirichlet
    dofs = apply_dirichlet(problem0, spaces)
    field = dofs.field_from_interior(np.zeros(dofs.n_interior))

    state = InverseState(field=field, kappa=float(kappa_init),
                         lambda_reg=float(lambda_reg),
                         observations=observations,
                         observation_points=np.asarray(observation_points),
                         forcing=forcing)
    report = InverseReport()
    report.kappa_history.append(state.kappa)

    system = assemble_inverse(state, colloc, dofs)
    loss = 0.5 * float(system.residual @ system.residual)
    report.initial_loss = loss
    scale = _damping_scale(system.jacobian_coeff)

    for k in range(1, cfg.max_iterations + 1):
        mu = 0.0
        while True:
            try:
                delta_c, delta_kappa = _bordered_step(system, mu, scale)
            except SingularSystemError:
                accepted = False
            else:
                step_norm = max(float(np.max(np.abs(delta_c))) if len(delta_c) else 0.0,
                                abs(delta_kappa))
                if step_norm <= cfg.step_tolerance:
                    report.converged = True
                    report.wall_seconds = time.perf_counter() - t0
                    return state.kappa, state.field, report
                trial_field = dofs.field_from_interior(dofs.interior_of(state.field) + delta_c)
                trial_state = InverseState(
                    field=trial_field, kappa=state.kappa + delta_kappa,
                    lambda_reg=state.lambda_reg, observations=observations,
                    observation_points=state.observation_points, forcing=forcing)
                trial_system = assemble_inverse(trial_state, colloc, dofs)
                trial_loss = 0.5 * float(trial_system.residual @ trial_system.residual)
                accepted = np.isfinite(trial_loss) and trial_loss <= loss * (1 + 1e-12) + 1e-300
            if accepted:
                break
            report.damping_events += 1
            mu = cfg.damping_initial if mu == 0.0 else mu * cfg.damping_growth
            if mu > 1e12:
                raise SolverError(f"damping exhausted at inverse iteration {k}")

        state, system, loss = trial_state, trial_system, trial_loss
        if abs(state.kappa) > KAPPA_DIVERGENCE:
            raise SolverError(f"kappa diverged: |kappa| = {abs(state.kappa):.3e}")
        report.iterations_used = k
        report.loss_history.append(loss)
        report.step_norm_history.append(step_norm)
        report.kappa_history.append(state.kappa)
        if loss <= cfg.loss_tolerance:
            report.converged = True
            break

    report.wall_seconds = time.perf_counter() - t0
    return state.kappa, state.field, report

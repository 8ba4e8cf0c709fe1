"""Finite-difference baseline: point-value unknowns on a uniform grid.

Unknowns are the interior nodal values; the residual is the classical
five-point Laplacian plus forcing, minimized by the same Gauss-Newton
normal-equations machinery as the spline solver (one step, since the
residual is affine).
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .assembly import ResidualSystem
from .gram import robust_loss
from .solver import (GNConfig, GNReport, SingularSystemError, SolverError,
                     solve_linear_normal_equations)


@dataclass
class FDGrid:
    """Uniform tensor grid on the unit square, boundary nodes included."""
    n_x: int
    n_y: int
    h_x: float
    h_y: float
    values: np.ndarray

    @classmethod
    def from_dirichlet(cls, n, g):
        if n < 3:
            raise ValueError(f"grid needs at least 3 nodes per dimension, got {n}")
        x = np.linspace(0.0, 1.0, n)
        values = np.zeros((n, n))
        for i in (0, n - 1):
            for j in range(n):
                values[i, j] = g(np.array([x[i], x[j]]))
                values[j, i] = g(np.array([x[j], x[i]]))
        return cls(n_x=n, n_y=n, h_x=1.0 / (n - 1), h_y=1.0 / (n - 1), values=values)

    @property
    def nodes(self):
        return (np.linspace(0.0, 1.0, self.n_x), np.linspace(0.0, 1.0, self.n_y))


def odil_assemble(grid, forcing):
    """Five-point Laplacian residual and Jacobian over interior nodes."""
    if grid.n_x < 3 or grid.n_y < 3:
        raise ValueError("grid too small for the five-point stencil")
    u = grid.values
    hx2, hy2 = grid.h_x ** 2, grid.h_y ** 2
    xs, ys = grid.nodes

    lap = ((u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / hx2
           + (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / hy2)
    f = np.array([[forcing(np.array([x, y])) for y in ys[1:-1]] for x in xs[1:-1]])
    residual = (lap + f).ravel()

    jacobian = _interior_laplacian(grid.n_x - 2, grid.n_y - 2, hx2, hy2)
    return ResidualSystem(residual=residual, jacobian=jacobian)


def _interior_laplacian(mx, my, hx2, hy2):
    def d2(m, h2):
        return scipy.sparse.diags(
            [np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]) / h2
    ix = scipy.sparse.identity(mx, format="csr")
    iy = scipy.sparse.identity(my, format="csr")
    L = (scipy.sparse.kron(d2(mx, hx2), iy) + scipy.sparse.kron(ix, d2(my, hy2)))
    return L.tocsr()


def odil_solve(n, problem, gram, cfg=None):
    """Solve the Poisson benchmark on an n x n grid; returns grid, report, L2 error.

    The residual is affine, so one Gauss-Newton step reaches the minimizer.
    """
    if problem.name != "poisson2d":
        raise ValueError("the finite-difference baseline only covers poisson2d")
    cfg = cfg or GNConfig()
    t0 = time.perf_counter()
    grid = FDGrid.from_dirichlet(n, problem.dirichlet)
    report = GNReport()

    for k in range(1, cfg.max_iterations + 1):
        system = odil_assemble(grid, problem.forcing)
        mu = 0.0
        while True:
            try:
                delta = solve_linear_normal_equations(
                    system.jacobian, system.residual, gram, mu)
                break
            except SingularSystemError:
                report.damping_events += 1
                mu = cfg.damping_initial if mu == 0.0 else mu * cfg.damping_growth
                if mu > 1e12:
                    raise SolverError("damping exhausted in finite-difference solve")
        step_norm = float(np.max(np.abs(delta)))
        if step_norm <= cfg.step_tolerance:
            report.converged = True
            break
        grid.values[1:-1, 1:-1] += delta.reshape(grid.n_x - 2, grid.n_y - 2)
        report.iterations_used = k
        system = odil_assemble(grid, problem.forcing)
        report.loss_history.append(robust_loss(gram, system.residual))
        report.step_norm_history.append(step_norm)

    report.wall_seconds = time.perf_counter() - t0
    err = nodal_l2_error(grid, problem.exact) if problem.exact is not None else None
    return grid, report, err


def nodal_l2_error(grid, exact):
    """Trapezoid-rule L2 norm of the nodal error against the exact solution."""
    xs, ys = grid.nodes
    ex = np.array([[exact(np.array([x, y])) for y in ys] for x in xs])
    e2 = (grid.values - ex) ** 2
    wx = np.full(grid.n_x, grid.h_x)
    wx[[0, -1]] = grid.h_x / 2
    wy = np.full(grid.n_y, grid.h_y)
    wy[[0, -1]] = grid.h_y / 2
    return float(np.sqrt(wx @ e2 @ wy))

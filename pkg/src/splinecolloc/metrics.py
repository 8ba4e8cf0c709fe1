"""Error norms, observed convergence rates, and loss/error diagnostics.

L2 (and optional H1-seminorm) errors are computed element by element
with tensor Gauss-Legendre quadrature in parameter space; convergence
rates are least-squares slopes of log(error) against log(h).
"""

from dataclasses import dataclass

import numpy as np

from .basis import collocation_matrix

RATE_SENTINEL = np.inf
ZERO_ERROR = 1e-300


@dataclass(frozen=True)
class ErrorReport:
    l2_error: float
    h1_seminorm_error: float | None
    quadrature_order: int


def _quad_rule(space, q):
    """Per-dimension quadrature nodes/weights over all elements."""
    ref_x, ref_w = np.polynomial.legendre.leggauss(q)
    breaks = np.unique(space.knots)
    nodes, weights = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        half = (hi - lo) / 2.0
        nodes.append(half * ref_x + (lo + hi) / 2.0)
        weights.append(half * ref_w)
    return np.concatenate(nodes), np.concatenate(weights)


def _field_on_grid(field, per_dim_nodes, orders):
    out = field.coefficients
    for axis, (space, nodes) in enumerate(zip(field.spaces, per_dim_nodes)):
        mat = collocation_matrix(space, nodes, orders[axis])
        moved = np.moveaxis(out, axis, 0)
        applied = mat @ moved.reshape(moved.shape[0], -1)
        out = np.moveaxis(applied.reshape((mat.shape[0],) + moved.shape[1:]), 0, axis)
    return out


def error_report(field, exact, quad_points=None, h1=False):
    """Quadrature-based errors of a spline field against a callable."""
    d = field.dim
    q = quad_points or max(s.degree for s in field.spaces) + 1
    rules = [_quad_rule(s, q) for s in field.spaces]
    per_dim_nodes = [r[0] for r in rules]
    per_dim_weights = [r[1] for r in rules]

    grids = np.meshgrid(*per_dim_nodes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    exact_vals = np.fromiter((exact(pt) for pt in pts), dtype=float,
                             count=len(pts)).reshape(grids[0].shape)

    w = per_dim_weights[0]
    for wd in per_dim_weights[1:]:
        w = np.multiply.outer(w, wd)

    uh = _field_on_grid(field, per_dim_nodes, (0,) * d)
    l2 = float(np.sqrt(np.sum(w * (uh - exact_vals) ** 2)))

    h1_err = None
    if h1:
        eps = 1e-6
        acc = 0.0
        for axis in range(d):
            orders = [0] * d
            orders[axis] = 1
            duh = _field_on_grid(field, per_dim_nodes, tuple(orders))
            dex = np.empty(len(pts))
            for k, pt in enumerate(pts):
                hi, lo = pt.copy(), pt.copy()
                hi[axis] = min(hi[axis] + eps, field.spaces[axis].b)
                lo[axis] = max(lo[axis] - eps, field.spaces[axis].a)
                dex[k] = (exact(hi) - exact(lo)) / (hi[axis] - lo[axis])
            acc += np.sum(w * (duh - dex.reshape(duh.shape)) ** 2)
        h1_err = float(np.sqrt(acc))
    return ErrorReport(l2_error=l2, h1_seminorm_error=h1_err, quadrature_order=q)


def l2_error(field, exact, quad_points=None):
    """L2 error of a field against an exact solution, in parameter space."""
    return error_report(field, exact, quad_points=quad_points).l2_error


def observed_rate(errors, mesh_sizes):
    """Least-squares slope of log(error) versus log(h)."""
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(mesh_sizes, dtype=float)
    if len(errors) < 3 or len(errors) != len(hs):
        raise ValueError("need at least 3 matching (h, error) pairs")
    if np.any(np.diff(hs) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    if np.any(errors < 0):
        raise ValueError("errors must be nonnegative")
    if np.any(errors <= ZERO_ERROR):
        return RATE_SENTINEL  # exact reproduction
    slope = np.polyfit(np.log(hs), np.log(errors), 1)[0]
    return float(slope)


def loss_error_series(problem, degree, element_counts, gram_kind="identity",
                      collocation_factor=2, cfg=None):
    """Solve a mesh sweep; returns rows of (h, sqrt(final loss), L2 error)."""
    from .assembly import apply_dirichlet, uniform_collocation
    from .basis import make_uniform_open_space
    from .gram import build_gram, robust_loss
    from .solver import gauss_newton
    from .assembly import assemble

    if len(element_counts) < 3:
        raise ValueError("need at least 3 element counts for a sweep")
    rows = []
    for n in element_counts:
        spaces = tuple(make_uniform_open_space(degree, n, 0.0, 1.0)
                       for _ in range(problem.dim))
        colloc = uniform_collocation(collocation_factor * n, problem.dim)
        dofs = apply_dirichlet(problem, spaces)
        gram = build_gram(gram_kind, colloc)
        field0 = dofs.field_from_interior(np.zeros(dofs.n_interior))
        field, _ = gauss_newton(problem, field0, colloc, dofs, gram, cfg)
        final_loss = robust_loss(gram, assemble(problem, field, colloc, dofs).residual)
        rows.append((spaces[0].h, float(np.sqrt(final_loss)),
                     l2_error(field, problem.exact)))
    return rows

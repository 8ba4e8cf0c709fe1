"""Benchmark PDE definitions and pointwise strong-form residuals.

Each problem bundles the differential operator, manufactured forcing,
Dirichlet data, and (where available) the exact solution.  Residuals are
evaluated in parameter space; sign conventions are frozen per benchmark
and do not affect the least-squares minimizer.
"""

import math

import numpy as np

from .basis import eval_basis, eval_field


class PDEProblem:
    """Strong-form PDE residual R(u) = sum_k a_k D^{o_k} u + N(u) + s*f.

    linear_terms: list of (coefficient, derivative-orders tuple).
    nonlinear: optional (value, derivative) callables acting pointwise on u.
    forcing_sign: +1 or -1, how f enters the residual.
    """

    def __init__(self, name, dim, linear_terms, forcing, dirichlet,
                 exact=None, nonlinear=None, forcing_sign=1.0, params=None):
        self.name = name
        self.dim = int(dim)
        self.linear_terms = tuple((float(c), tuple(o)) for c, o in linear_terms)
        self.forcing = forcing
        self.dirichlet = dirichlet
        self.exact = exact
        self.nonlinear = nonlinear
        self.forcing_sign = float(forcing_sign)
        self.params = dict(params or {})

    @property
    def is_linear(self):
        return self.nonlinear is None

    def __repr__(self):
        return f"PDEProblem({self.name!r}, dim={self.dim}, params={self.params})"


def residual_at(problem, field, point):
    """Strong-form residual of the field at one parametric point."""
    r = 0.0
    for coef, orders in problem.linear_terms:
        r += coef * eval_field(field, point, orders)
    if problem.nonlinear is not None:
        value_fn, _ = problem.nonlinear
        r += value_fn(eval_field(field, point))
    r += problem.forcing_sign * problem.forcing(point)
    return r


def residual_gradient_row(problem, field, point):
    """Sparse Jacobian row dR/dc at one point.

    Returns (flat_indices, values) over the (p+1)^d active coefficients,
    flat indices into the coefficient array in C order.
    """
    point = np.atleast_1d(np.asarray(point, dtype=float))
    per_dim = []
    firsts = []
    for space, x in zip(field.spaces, point):
        tabs = {}
        for r in {o for _, orders in problem.linear_terms for o in orders} | {0}:
            fa, vals = eval_basis(space, x, r)
            tabs[r] = vals
        per_dim.append(tabs)
        firsts.append(fa)

    def outer(orders):
        out = per_dim[0][orders[0]]
        for d in range(1, len(orders)):
            out = np.multiply.outer(out, per_dim[d][orders[d]])
        return out

    row = np.zeros(tuple(s.degree + 1 for s in field.spaces))
    for coef, orders in problem.linear_terms:
        row += coef * outer(orders)
    if problem.nonlinear is not None:
        _, deriv_fn = problem.nonlinear
        u = eval_field(field, point)
        row += deriv_fn(u) * outer((0,) * field.dim)

    shape = field.coefficients.shape
    grids = np.meshgrid(
        *[fa + np.arange(s.degree + 1) for fa, s in zip(firsts, field.spaces)],
        indexing="ij",
    )
    flat = np.ravel_multi_index([g.ravel() for g in grids], shape)
    return flat, row.ravel()


def ej_exact_rates(epsilon):
    """Characteristic exponents r1 > 0 > r2 of the boundary-layer solution."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    root = math.sqrt(1.0 + 4.0 * epsilon ** 2 * math.pi ** 2)
    r1 = (1.0 + root) / (2.0 * epsilon)
    r2 = (1.0 - root) / (2.0 * epsilon)
    return r1, r2


def ej_exact(epsilon, x, y):
    """Exact boundary-layer solution of the convection-diffusion benchmark."""
    r1, r2 = ej_exact_rates(epsilon)
    num = math.exp(r1 * (x - 1.0)) - math.exp(r2 * (x - 1.0))
    den = math.exp(-r1) - math.exp(-r2)
    return num / den * math.sin(math.pi * y)


BENCHMARKS = ("poisson2d", "eriksson_johnson", "helmholtz2d",
              "helmholtz3d_ball", "allen_cahn", "ej_disk")


def make_benchmark(name, **params):
    """Construct a fully wired benchmark problem by name."""
    if name == "poisson2d":
        def exact(pt):
            return math.sin(2 * math.pi * pt[0]) * math.sin(2 * math.pi * pt[1])

        def forcing(pt):
            return 8 * math.pi ** 2 * exact(pt)

        return PDEProblem(
            name, 2,
            linear_terms=[(1.0, (2, 0)), (1.0, (0, 2))],
            forcing=forcing, dirichlet=lambda pt: 0.0, exact=exact,
            forcing_sign=+1.0,
        )

    if name in ("eriksson_johnson", "ej_disk"):
        eps = _require(params, "epsilon", name)
        if eps <= 0:
            raise ValueError("epsilon must be positive")

        def dirichlet(pt):
            if pt[0] == 0.0:
                return math.sin(math.pi * pt[1])
            return 0.0

        exact = None
        if name == "eriksson_johnson":
            exact = lambda pt, eps=eps: ej_exact(eps, pt[0], pt[1])
        return PDEProblem(
            name, 2,
            linear_terms=[(-eps, (2, 0)), (-eps, (0, 2)), (1.0, (1, 0))],
            forcing=lambda pt: 0.0, dirichlet=dirichlet, exact=exact,
            forcing_sign=+1.0, params={"epsilon": eps},
        )

    if name == "helmholtz2d":
        kappa = _require(params, "kappa", name)
        alpha = params.get("alpha", 1.0)
        if alpha < 0:
            raise ValueError("alpha must be >= 0")

        def exact(pt, k=kappa):
            return math.sin(k * math.pi * pt[0]) * math.sin(k * math.pi * pt[1])

        def forcing(pt, k=kappa, al=alpha):
            return (2 * (k * math.pi) ** 2 + al) * exact(pt)

        return PDEProblem(
            name, 2,
            linear_terms=[(-1.0, (2, 0)), (-1.0, (0, 2)), (alpha, (0, 0))],
            forcing=forcing, dirichlet=lambda pt: 0.0, exact=exact,
            forcing_sign=-1.0, params={"kappa": kappa, "alpha": alpha},
        )

    if name == "helmholtz3d_ball":
        kappa = _require(params, "kappa", name)

        def exact(pt, k=kappa):
            return (math.sin(k * math.pi * pt[0]) * math.sin(k * math.pi * pt[1])
                    * math.sin(k * math.pi * pt[2]))

        def forcing(pt, k=kappa):
            return (3 * k ** 2 * math.pi ** 2 + k ** 2) * exact(pt)

        return PDEProblem(
            name, 3,
            linear_terms=[(-1.0, (2, 0, 0)), (-1.0, (0, 2, 0)), (-1.0, (0, 0, 2)),
                          (kappa ** 2, (0, 0, 0))],
            forcing=forcing, dirichlet=lambda pt: 0.0, exact=exact,
            forcing_sign=-1.0, params={"kappa": kappa},
        )

    if name == "allen_cahn":
        eps = _require(params, "epsilon", name)
        if eps <= 0:
            raise ValueError("epsilon must be positive")

        def exact(pt, eps=eps):
            return math.tanh((pt[0] + pt[1] - 1.0) / (math.sqrt(2.0) * eps))

        def forcing(pt):
            t = exact(pt)
            return t - t ** 3

        return PDEProblem(
            name, 2,
            linear_terms=[(-eps ** 2, (2, 0)), (-eps ** 2, (0, 2))],
            forcing=forcing, dirichlet=exact, exact=exact,
            nonlinear=(lambda u: u ** 3 - u, lambda u: 3.0 * u ** 2 - 1.0),
            forcing_sign=-1.0, params={"epsilon": eps},
        )

    raise ValueError(f"unknown benchmark {name!r}; expected one of {BENCHMARKS}")


def _require(params, key, name):
    if key not in params or params[key] is None:
        raise ValueError(f"benchmark {name!r} requires parameter {key!r}")
    return float(params[key])

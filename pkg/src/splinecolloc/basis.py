"""Univariate B-spline bases on open knot vectors and tensor-product fields.

Bases are evaluated with the Cox-de Boor recursion; derivatives up to
second order are supported (no operator in this package needs more).
Evaluation uses the half-open span convention with the last span closed,
so every routine is defined on the closed interval [a, b].
"""

import numpy as np
import scipy.sparse


class SplineSpace1D:
    """A univariate B-spline space of degree p on an open knot vector.

    Attributes:
        degree (int): spline degree p >= 1.
        knots (ndarray): nondecreasing knot vector; first and last values
            repeated exactly p+1 times.
        n_elements (int): number of nontrivial knot spans.
        n_basis (int): number of basis functions, len(knots) - p - 1.
        a, b (float): endpoints of the parametric interval.
        h (float): mesh size (b - a) / n_elements.
    """

    __slots__ = ("degree", "knots", "n_elements", "n_basis", "a", "b", "h")

    def __init__(self, degree, knots):
        knots = np.asarray(knots, dtype=float)
        if degree < 1:
            raise ValueError(f"degree must be >= 1, got {degree}")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knots must be nondecreasing")
        p = int(degree)
        if not (np.all(knots[: p + 1] == knots[0]) and np.all(knots[-(p + 1):] == knots[-1])):
            raise ValueError("knot vector must be open (endpoints repeated p+1 times)")
        if len(knots) > p + 1 and (knots[p] == knots[p + 1] == knots[0]):
            raise ValueError("first knot repeated more than p+1 times")
        self.degree = p
        self.knots = knots
        self.a = float(knots[0])
        self.b = float(knots[-1])
        if self.a >= self.b:
            raise ValueError("degenerate interval: a must be < b")
        unique = np.unique(knots)
        self.n_elements = len(unique) - 1
        self.n_basis = len(knots) - p - 1
        self.h = (self.b - self.a) / self.n_elements

    def __repr__(self):
        return (f"SplineSpace1D(p={self.degree}, n_elements={self.n_elements}, "
                f"N={self.n_basis}, [{self.a}, {self.b}])")

    def find_span(self, x):
        """Index of the knot span containing x (last span closed at b)."""
        p = self.degree
        if x < self.a or x > self.b:
            raise ValueError(f"point {x} outside domain [{self.a}, {self.b}]")
        if x >= self.knots[self.n_basis]:
            return self.n_basis - 1
        return int(np.searchsorted(self.knots, x, side="right")) - 1


def make_uniform_open_space(p, n_elements, a, b):
    """Uniform open-knot space with n_elements spans on [a, b]; N = n + p."""
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    if n_elements < 1:
        raise ValueError(f"element count must be >= 1, got {n_elements}")
    if not a < b:
        raise ValueError(f"degenerate interval [{a}, {b}]")
    interior = np.linspace(a, b, n_elements + 1)
    knots = np.concatenate([np.full(p, a), interior, np.full(p, b)])
    return SplineSpace1D(p, knots)


def eval_basis(space, x, r=0):
    """Evaluate the p+1 basis functions (or their r-th derivatives) active at x.

    Returns (first_active, values) where values has length p+1 and
    first_active is the index of the first active basis function.  All
    other basis functions vanish at x.  Derivative orders above p return
    zeros; orders above 2 are rejected.
    """
    if r > 2:
        raise ValueError("derivative orders above 2 are not supported")
    p = space.degree
    span = space.find_span(x)
    if r > p:
        return span - p, np.zeros(p + 1)
    ders = _ders_basis(space.knots, p, span, x, r)
    return span - p, ders[r]


def _ders_basis(U, p, span, x, nd):
    """Nonzero basis functions and derivatives up to order nd at x.

    Standard Cox-de Boor triangular scheme; returns array (nd+1, p+1).
    """
    ndu = np.empty((p + 1, p + 1))
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - U[span + 1 - j]
        right[j] = U[span + j] - x
        saved = 0.0
        for rr in range(j):
            ndu[j, rr] = right[rr + 1] + left[j - rr]
            temp = ndu[rr, j - 1] / ndu[j, rr]
            ndu[rr, j] = saved + right[rr + 1] * temp
            saved = left[j - rr] * temp
        ndu[j, j] = saved
    ders = np.zeros((nd + 1, p + 1))
    ders[0] = ndu[:, p]
    a = np.empty((2, p + 1))
    for rr in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, nd + 1):
            d = 0.0
            rk = rr - k
            pk = p - k
            if rr >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if rr - 1 <= pk else p - rr
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if rr <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, rr]
                d += a[s2, k] * ndu[rr, pk]
            ders[k, rr] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, nd + 1):
        ders[k] *= fac
        fac *= p - k
    return ders


def greville_abscissae(space):
    """Greville points: averages of p consecutive interior knots."""
    p = space.degree
    U = space.knots
    return np.array([U[i + 1: i + p + 1].mean() for i in range(space.n_basis)])


def collocation_matrix(space, points, r=0):
    """Sparse (len(points) x N) matrix of r-th derivative basis values.

    Row k holds the active basis (derivative) values at points[k]; this is
    the 1D building block of all tensor-product assembly in this package.
    """
    points = np.asarray(points, dtype=float)
    p = space.degree
    m = len(points)
    data = np.empty((m, p + 1))
    cols = np.empty((m, p + 1), dtype=np.int64)
    for k, x in enumerate(points):
        fa, vals = eval_basis(space, x, r)
        data[k] = vals
        cols[k] = np.arange(fa, fa + p + 1)
    rows = np.repeat(np.arange(m), p + 1)
    return scipy.sparse.csr_matrix(
        (data.ravel(), (rows, cols.ravel())), shape=(m, space.n_basis)
    )


class TensorSplineField:
    """Tensor-product spline field: coefficients over d univariate spaces."""

    __slots__ = ("spaces", "coefficients")

    def __init__(self, spaces, coefficients):
        spaces = tuple(spaces)
        if not 1 <= len(spaces) <= 3:
            raise ValueError("dimension must be 1, 2 or 3")
        coefficients = np.asarray(coefficients, dtype=float)
        expected = tuple(s.n_basis for s in spaces)
        if coefficients.shape != expected:
            raise ValueError(
                f"coefficient shape {coefficients.shape} does not match basis counts {expected}"
            )
        if not np.all(np.isfinite(coefficients)):
            raise ValueError("coefficients must be finite")
        self.spaces = spaces
        self.coefficients = coefficients

    @property
    def dim(self):
        return len(self.spaces)

    def copy_with(self, coefficients):
        return TensorSplineField(self.spaces, coefficients)


def eval_field(field, point, orders=None):
    """Evaluate a tensor-product field (or a mixed derivative) at one point.

    Only the (p+1)^d active coefficients are read.
    """
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if len(point) != field.dim:
        raise ValueError(f"expected {field.dim}-dimensional point, got {len(point)}")
    if orders is None:
        orders = (0,) * field.dim
    block = field.coefficients
    for space, x, r in zip(field.spaces, point, orders):
        fa, vals = eval_basis(space, x, r)
        # contract the leading axis; the next dimension then becomes leading
        block = np.tensordot(vals, block[fa: fa + space.degree + 1], axes=(0, 0))
    return float(block)


def interpolate(spaces, fn):
    """Tensor-product Greville interpolant of a callable on [a,b]^d.

    Solves one banded 1D collocation system per axis; the result
    reproduces any function the spline space contains exactly.
    """
    spaces = tuple(spaces)
    grev = [greville_abscissae(s) for s in spaces]
    grids = np.meshgrid(*grev, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    values = np.array([fn(pt) for pt in pts]).reshape([len(g) for g in grev])
    coeffs = values
    for axis, space in enumerate(spaces):
        B = collocation_matrix(space, grev[axis]).toarray()
        flat = np.moveaxis(coeffs, axis, 0).reshape(space.n_basis, -1)
        solved = np.linalg.solve(B, flat)
        coeffs = np.moveaxis(
            solved.reshape((space.n_basis,) + coeffs.shape[:axis] + coeffs.shape[axis + 1:]),
            0, axis,
        )
    return TensorSplineField(spaces, coeffs)

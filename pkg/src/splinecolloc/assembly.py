"""Collocation grids, strong Dirichlet elimination, and system assembly.

The residual vector and sparse Jacobian are assembled over interior
spline coefficients only; boundary coefficients are fixed by 1D/2D
Greville fits of the Dirichlet data and folded into the residual.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .basis import (TensorSplineField, collocation_matrix, greville_abscissae)

CORNER_TOL = 1e-10


@dataclass(frozen=True)
class CollocationSet:
    """Structured interior collocation grid on [0,1]^d."""
    points: np.ndarray          # (M, d), lexicographic over the grid
    per_dim: tuple              # d coordinate arrays
    n_per_dim: int
    fill_distance: float

    @property
    def size(self):
        return self.points.shape[0]


def uniform_collocation(n_c, dim):
    """Midpoint grid: coordinate values (i - 1/2)/n_c, strictly interior."""
    if n_c < 2:
        raise ValueError(f"need at least 2 collocation points per dimension, got {n_c}")
    if dim not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dim}")
    coords = (np.arange(n_c) + 0.5) / n_c
    grids = np.meshgrid(*([coords] * dim), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    fill = np.sqrt(dim) / (2.0 * n_c)
    return CollocationSet(points=points, per_dim=(coords,) * dim,
                          n_per_dim=n_c, fill_distance=fill)


class DofMap:
    """Partition of spline coefficients into fixed boundary layer and interior.

    boundary_values holds the full coefficient array with fitted boundary
    entries and zeros at interior positions; interior_flat lists the free
    coefficient indices (C order, i.e. lexicographic).
    """

    def __init__(self, spaces, boundary_values, boundary_mask):
        self.spaces = tuple(spaces)
        self.boundary_values = boundary_values
        self.boundary_mask = boundary_mask
        flat_mask = boundary_mask.ravel()
        self.interior_flat = np.flatnonzero(~flat_mask)
        self.n_interior = len(self.interior_flat)
        # column index per coefficient, -1 on the boundary layer
        self.column_of = np.full(flat_mask.shape, -1, dtype=np.int64)
        self.column_of[self.interior_flat] = np.arange(self.n_interior)

    @property
    def shape(self):
        return tuple(s.n_basis for s in self.spaces)

    def field_from_interior(self, z):
        """Full field from an interior unknown vector."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n_interior,):
            raise ValueError(f"expected {self.n_interior} interior values, got {z.shape}")
        coeffs = self.boundary_values.copy()
        coeffs.ravel()[self.interior_flat] = z
        return TensorSplineField(self.spaces, coeffs)

    def interior_of(self, field):
        return field.coefficients.ravel()[self.interior_flat].copy()


def apply_dirichlet(problem, spaces):
    """Fit the boundary coefficient layer to the Dirichlet data.

    Each boundary face is fitted by tensor-product Greville interpolation
    of g over the face; shared edges/corners must agree (continuous g).
    """
    spaces = tuple(spaces)
    if len(spaces) != problem.dim:
        raise ValueError("number of spaces does not match problem dimension")
    shape = tuple(s.n_basis for s in spaces)
    d = len(spaces)

    mask = np.zeros(shape, dtype=bool)
    for axis in range(d):
        idx = [slice(None)] * d
        idx[axis] = 0
        mask[tuple(idx)] = True
        idx[axis] = shape[axis] - 1
        mask[tuple(idx)] = True

    values = np.full(shape, np.nan)
    for axis in range(d):
        for side, coord in ((0, spaces[axis].a), (shape[axis] - 1, spaces[axis].b)):
            face_coeffs = _fit_face(problem.dirichlet, spaces, axis, coord)
            idx = [slice(None)] * d
            idx[axis] = side
            target = values[tuple(idx)]
            assigned = ~np.isnan(target)
            scale = 1.0 + np.max(np.abs(face_coeffs)) if face_coeffs.size else 1.0
            if np.any(assigned):
                diff = np.max(np.abs(target[assigned] - face_coeffs[assigned]))
                if diff > CORNER_TOL * scale:
                    raise ValueError(
                        f"Dirichlet data inconsistent at shared boundary entries "
                        f"(max mismatch {diff:.3e}); g appears discontinuous")
            values[tuple(idx)] = face_coeffs

    boundary_values = np.zeros(shape)
    boundary_values[mask] = values[mask]
    return DofMap(spaces, boundary_values, mask)


def _fit_face(g, spaces, axis, coord):
    """Greville interpolation of g restricted to the face {x_axis = coord}."""
    other = [i for i in range(len(spaces)) if i != axis]
    if not other:
        pt = np.zeros(1)
        pt[0] = coord
        return np.array(g(pt))
    grev = [greville_abscissae(spaces[i]) for i in other]
    grids = np.meshgrid(*grev, indexing="ij")
    vals = np.empty(grids[0].shape)
    it = np.nditer(grids[0], flags=["multi_index"])
    pt = np.empty(len(spaces))
    for _ in it:
        mi = it.multi_index
        pt[axis] = coord
        for k, i in enumerate(other):
            pt[i] = grids[k][mi]
        vals[mi] = g(pt)
    coeffs = vals
    for k, i in enumerate(other):
        B = collocation_matrix(spaces[i], grev[k]).toarray()
        flat = np.moveaxis(coeffs, k, 0).reshape(spaces[i].n_basis, -1)
        solved = np.linalg.solve(B, flat)
        coeffs = np.moveaxis(
            solved.reshape((spaces[i].n_basis,) + coeffs.shape[:k] + coeffs.shape[k + 1:]),
            0, k)
    return coeffs


@dataclass(frozen=True)
class ResidualSystem:
    """Residual vector and sparse Jacobian over interior coefficients."""
    residual: np.ndarray
    jacobian: scipy.sparse.csr_matrix


class _OperatorTables:
    """Per-dimension basis/derivative collocation matrices, built once."""

    def __init__(self, problem, spaces, colloc):
        orders_needed = {0}
        for _, orders in problem.linear_terms:
            orders_needed.update(orders)
        self.mats = []
        for space, coords in zip(spaces, colloc.per_dim):
            self.mats.append({r: collocation_matrix(space, coords, r)
                              for r in sorted(orders_needed)})

    def derivative_grid(self, coeffs, orders):
        """Apply the per-axis operators to a coefficient array."""
        out = coeffs
        for axis, r in enumerate(orders):
            mat = self.mats[axis][r]
            moved = np.moveaxis(out, axis, 0)
            flat = moved.reshape(moved.shape[0], -1)
            applied = mat @ flat
            out = np.moveaxis(
                applied.reshape((mat.shape[0],) + moved.shape[1:]), 0, axis)
        return out

    def kron(self, orders):
        mats = [self.mats[axis][r] for axis, r in enumerate(orders)]
        K = mats[0]
        for m in mats[1:]:
            K = scipy.sparse.kron(K, m, format="csr")
        return K


def assemble(problem, field, colloc, dofs):
    """Assemble residual and interior-column Jacobian at the current field.

    Rows follow the lexicographic collocation order, columns the
    lexicographic interior-coefficient order; output is deterministic.
    """
    if field.dim != problem.dim or len(dofs.spaces) != field.dim:
        raise ValueError("field / problem / dof map dimensions disagree")
    if colloc.size < dofs.n_interior:
        warnings.warn(
            f"underdetermined system: {colloc.size} collocation points for "
            f"{dofs.n_interior} interior coefficients", RuntimeWarning)

    tables = _OperatorTables(problem, field.spaces, colloc)
    coeffs = field.coefficients

    forcing = np.array([problem.forcing(pt) for pt in colloc.points])
    residual = problem.forcing_sign * forcing
    for coef, orders in problem.linear_terms:
        residual = residual + coef * tables.derivative_grid(coeffs, orders).ravel()

    jac_full = None
    for coef, orders in problem.linear_terms:
        term = coef * tables.kron(orders)
        jac_full = term if jac_full is None else jac_full + term

    if problem.nonlinear is not None:
        value_fn, deriv_fn = problem.nonlinear
        u = tables.derivative_grid(coeffs, (0,) * field.dim).ravel()
        residual = residual + value_fn(u)
        mass = tables.kron((0,) * field.dim)
        jac_full = jac_full + scipy.sparse.diags(deriv_fn(u)) @ mass

    jacobian = jac_full.tocsc()[:, dofs.interior_flat].tocsr()
    jacobian.sort_indices()
    return ResidualSystem(residual=residual, jacobian=jacobian)

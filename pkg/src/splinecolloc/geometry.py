"""Smooth parametric-to-physical mappings for output sampling.

The PDE residuals in this package are always evaluated in parameter
space; these mappings only transport solution samples onto the physical
disk/ball geometry for visualization and export.
"""

import numpy as np

from .basis import eval_field


class GeometryMap:
    """Identity, square-to-disk, or cube-to-ball mapping of [0,1]^d."""

    KINDS = ("identity", "disk", "ball")

    def __init__(self, kind, dim=None):
        if kind not in self.KINDS:
            raise ValueError(f"unknown geometry kind {kind!r}; expected one of {self.KINDS}")
        if kind == "disk":
            dim = 2
        elif kind == "ball":
            dim = 3
        elif dim is None:
            raise ValueError("identity mapping needs an explicit dimension")
        self.kind = kind
        self.dim = int(dim)

    def __repr__(self):
        return f"GeometryMap({self.kind!r}, dim={self.dim})"


def map_point(geo, parametric):
    """Map one parametric point in [0,1]^d to physical coordinates."""
    u = np.atleast_1d(np.asarray(parametric, dtype=float))
    if len(u) != geo.dim:
        raise ValueError(f"expected {geo.dim} parametric coordinates, got {len(u)}")
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise ValueError(f"parametric point {u} outside [0,1]^{geo.dim}")
    if geo.kind == "identity":
        return u.copy()
    s = 2.0 * u - 1.0
    if geo.kind == "disk":
        a, b = s
        x = a * np.sqrt(max(1.0 - b * b / 2.0, 0.0))
        y = b * np.sqrt(max(1.0 - a * a / 2.0, 0.0))
        return np.array([x, y])
    a, b, c = s
    # radicands stay >= 1/3 on the cube; the clamp is purely defensive
    x = a * np.sqrt(max(1.0 - b * b / 2.0 - c * c / 2.0 + b * b * c * c / 3.0, 0.0))
    y = b * np.sqrt(max(1.0 - a * a / 2.0 - c * c / 2.0 + a * a * c * c / 3.0, 0.0))
    z = c * np.sqrt(max(1.0 - a * a / 2.0 - b * b / 2.0 + a * a * b * b / 3.0, 0.0))
    return np.array([x, y, z])


def sample_mapped_grid(geo, field, samples_per_dim):
    """Evaluate a field on a uniform parametric grid mapped to physical space.

    Returns an array of shape (samples_per_dim**d, d+1): physical
    coordinates followed by the field value, row-major over the grid.
    """
    if samples_per_dim < 2:
        raise ValueError("samples_per_dim must be >= 2")
    if field.dim != geo.dim:
        raise ValueError("field and geometry dimensions differ")
    ticks = np.linspace(0.0, 1.0, samples_per_dim)
    grids = np.meshgrid(*([ticks] * geo.dim), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    rows = np.empty((len(points), geo.dim + 1))
    for k, pt in enumerate(points):
        rows[k, : geo.dim] = map_point(geo, pt)
        rows[k, geo.dim] = eval_field(field, pt)
    return rows

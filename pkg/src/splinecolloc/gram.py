"""SPD Gram weighting for the robust loss Phi = 1/2 R^T G^{-1} R.

The identity weighting reduces to plain least squares and is the default
for every forward benchmark; the discrete-H1 weighting (mass plus graph
Laplacian on the collocation grid) is the robust option used for
loss/error correlation studies.  Non-identity operators are factorized
exactly once and applied through triangular solves.
"""

import numpy as np
import scipy.sparse
import scipy.sparse.linalg


class GramOperator:
    KINDS = ("identity", "h1")

    def __init__(self, kind, size, matrix=None):
        if kind not in self.KINDS:
            raise ValueError(f"unknown gram kind {kind!r}; expected one of {self.KINDS}")
        self.kind = kind
        self.size = int(size)
        self.matrix = matrix
        self._solve = None
        self.factorization_count = 0
        if kind != "identity":
            if matrix is None:
                raise ValueError("non-identity gram needs an explicit matrix")
            try:
                lu = scipy.sparse.linalg.splu(matrix.tocsc())
            except RuntimeError as exc:
                raise RuntimeError(f"gram factorization failed: {exc}") from exc
            self.factorization_count = 1
            self._solve = lu.solve

    @property
    def is_identity(self):
        return self.kind == "identity"

    def __repr__(self):
        return f"GramOperator({self.kind!r}, size={self.size})"


def build_gram(kind, colloc):
    """Build (and factorize once) the Gram operator for a collocation grid."""
    M = colloc.size
    if kind == "identity":
        return GramOperator("identity", M)
    if kind != "h1":
        raise ValueError(f"unknown gram kind {kind!r}")
    n = colloc.n_per_dim
    dim = colloc.points.shape[1]
    spacing = 1.0 / n
    w = spacing ** dim  # collocation cell volume
    # forward difference along one axis, scaled by 1/spacing
    D1 = scipy.sparse.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1],
                            shape=(n - 1, n)) / spacing
    eye = scipy.sparse.identity(n, format="csr")
    G = scipy.sparse.identity(M, format="csr")
    for axis in range(dim):
        factors = [eye] * dim
        factors[axis] = D1
        D = factors[0]
        for f in factors[1:]:
            D = scipy.sparse.kron(D, f, format="csr")
        G = G + D.T @ D
    return GramOperator("h1", M, matrix=(w * G).tocsc())


def apply_inverse(gram, v):
    """Return G^{-1} v via the cached factorization."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != gram.size:
        raise ValueError(f"expected leading dimension {gram.size}, got {v.shape[0]}")
    if gram.is_identity:
        return v.copy()
    return gram._solve(v)


def robust_loss(gram, residual):
    """Phi = 1/2 R^T G^{-1} R; nonnegative, zero only at zero residual."""
    residual = np.asarray(residual, dtype=float)
    if residual.shape != (gram.size,):
        raise ValueError(f"expected residual of length {gram.size}, got {residual.shape}")
    return 0.5 * float(residual @ apply_inverse(gram, residual))

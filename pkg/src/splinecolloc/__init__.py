"""Strong-form spline collocation PDE solver with sparse Gauss-Newton."""

from .basis import (SplineSpace1D, TensorSplineField, eval_basis, eval_field,
                    greville_abscissae, interpolate, make_uniform_open_space)
from .geometry import GeometryMap, map_point, sample_mapped_grid
from .problems import PDEProblem, ej_exact, make_benchmark, residual_at, residual_gradient_row
from .assembly import (CollocationSet, DofMap, ResidualSystem, apply_dirichlet,
                       assemble, uniform_collocation)
from .gram import GramOperator, apply_inverse, build_gram, robust_loss
from .solver import (GNConfig, GNReport, SingularSystemError, SolverError,
                     gauss_newton, newton_nonlinear, solve_linear_normal_equations)
from .odil_fd import FDGrid, nodal_l2_error, odil_assemble, odil_solve
from .inverse import (AugmentedSystem, InverseState, assemble_inverse,
                      solve_inverse, synthesize_observations)
from .metrics import ErrorReport, error_report, l2_error, loss_error_series, observed_rate

__version__ = "0.1.0"

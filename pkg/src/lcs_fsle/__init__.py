"""Finite-time, finite-size and infinitesimal-size Lyapunov exponents for 2-D flows,
separation-time jump detection, and ridge extraction / continuation."""

from .errors import (DegenerateEigenvalueError, GridFormatError, InvalidHorizonError, LCSError,
                     MissingDataError, NonFiniteError, NotCrossedError, NotInZ0Error,
                     OutOfBoundsError)
from .flows import (FlowModel, TransitionWindow, rate_of_strain, smooth_transition, velocity,
                    velocity_gradient)
from .integrator import (EventMode, FlowSample, IntegratorConfig, TrajectoryRecord, flow_map,
                         flow_map_batch, flow_map_with_gradient, record_trajectory,
                         refine_crossing)
from .strain import (EigenPair2, SymmetricTensor2, cauchy_green, eig_sym2, ftle,
                     lambda_max_time_derivative)
from .scalar_field import (CriticalKind, CriticalPoint, GridSpec, ScalarGrid,
                           find_critical_points, gradient_at, hessian_at, interpolate, read_grid,
                           write_grid, write_image)
from .separation import (DegeneracyFlag, FieldKind, SeparationOutcome, SeparationParams, Status,
                         compute_field, degeneracy_scan, fsle, fsle_tau, isle, isle_tau0)
from .ridges import (ContinuationReport, RidgeCurve, RidgeReport, continue_fsle_ridge,
                     extract_ridges, gradient_flow_trajectory, lyapunov_type_number,
                     smoothness_degree, verify_ridge)

__version__ = "0.1.0"

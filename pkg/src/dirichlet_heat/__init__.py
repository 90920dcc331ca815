"""Coefficient recovery for Dirichlet series and initial-datum inversion for
the fractional heat equation on intervals and boxes.

All reals are mpmath ``mpf`` values at a configurable working precision
(256 bits by default, see :func:`set_bits`).
"""

from .biortho import (BiorthoFamily, LogRecoveryConfig, RecoveryReport, build_family,
                      extract_coefficients, recover_log, select_truncation, truncation_constant)
from .errors import (DirichletHeatError, DomainError, GapConditionError, IllConditionedError,
                     InterpolationError, MissingSampleError, RegimeError, SensorError,
                     StructuralError)
from .forward import (DirichletSample, HyperplaneSample, InitialDatum, TensorDatum, boundary_flux,
                      dirichlet_evaluator, eval_dirichlet, heat_point, hyperplane_sample, sample,
                      tensor_eval)
from .inverse_heat import (InversionConfig, InversionResult, MeasurementChannel,
                           recover_initial_boundary, recover_initial_point, recover_tensor)
from .kernels import BACKEND
from .lab import ExperimentConfig, RateFit, export, fit_rate, import_records, run_experiment
from .peeling import PeelingConfig, PeelingTrace, recover_peeling
from .precision import get_bits, set_bits, workbits
from .sensor import SensorPoint, propose_point, verify_point
from .sequences import CoefficientSequence, EigenvalueSequence, GapParams, validate_gap
from .vandermonde import HolderConfig, VandermondeSystem, recover_holder, solve_primal

__version__ = "0.1.0"

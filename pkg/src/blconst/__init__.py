"""Brascamp-Lieb constants: gaussian (Lieb) and generalized Barthe formulations."""
from .barthe import (compute_dI, barthe_objective, flatten_exponents, optimize_barthe, optimize_lambda,
                     rank1_constant)
from .datum import BLDatum, builtin_datum, make_datum, scaling_defect, validate_datum
from .exceptions import (BLError, DatumFormatError, DegenerateError, InfiniteConstantError,
                         InvalidDatumError, StepFailure)
from .finiteness import candidate_subspaces, decide_finiteness, divergence_certificate, subspace_defect
from .gaussian import fixed_point_step, gaussian_ratio, optimize_lieb
from .linalg import RotationParams, SpectralPD, assemble_pd, cauchy_binet_det, rotation_from_parameters
from .probe import (four_linear_reference, general_four_linear_reference, holder_exponent_estimate,
                    one_sided_slopes, sample_path)
from .report import OptimizeReport, SolverConfig
from .solve import solve

__version__ = "0.1.0"

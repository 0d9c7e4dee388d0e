"""Steady periodic stratified water waves in height-function form, with
regularity and inequality verification tools."""

from .errors import (BifurcationPointError, BlowUpError, ChecksumError, ConfigError,
                     DivergenceError, DomainError, InequalityViolation, InsufficientModesError,
                     NotGevreyDiagnosableError, ResolutionError, RuleViolationError,
                     StagnationError, StrataWaveError, UnsupportedOrderError)
from .function_space import (CoefficientFunction, GevreyCheck, GevreyConstants,
                             estimate_gevrey_constants, eval_derivative, verify_gevrey_bound)
from .hodograph import (PhysicalStreamline, physical_points, psi_at, reconstruct_psi,
                        reconstruct_surface, streamline, velocity_field)
from .inequalities import (MajorantSequence, empirical_leibniz_check, majorant_product,
                           verify_binomial_dominance, verify_factorial_superadditivity,
                           verify_kernel_sum, verify_lemma_sums)
from .regularity import (RegularityReport, discrete_holder_norm, em_diagnostic, fm_diagnostic,
                         fourier_decay_fit, gevrey_index_fit, regularity_report,
                         spectral_derivative, verify_derivative_equation)
from .strip_problem import (HeightField, StripGrid, WaveParameters, full_residual,
                            gravity_surface_identity, interior_residual, linearize,
                            surface_residual)
from .wave_solver import (ContinuationState, LaminarProfile, check_no_stagnation,
                          continuation_run, critical_kappa, newton_solve, quadratic_constant,
                          residual_noise_floor, solve_laminar)

__version__ = "0.1.0"

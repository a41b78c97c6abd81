"""Scaled Shepard quasi-interpolation: kernels, the estimator and its error analysis."""

from ..constants import ConstantPair, constant_C_alpha_d, constant_C_star, constant_K_d
from .analysis import (
    StudyRecord,
    TestFunction,
    affine_function,
    catalog,
    constant_function,
    convergence_study,
    distance_function,
    distance_to_set_function,
    empirical_modulus,
    grid_family,
    hexagonal_family,
    kernel_sum_checks,
    modulus_of_continuity,
    operator_norm_bound,
    poisson_family,
    probe_points,
    sine_sum_function,
    sup_error,
)
from .estimator import ErrorBudget, ScaledShepardRegressor, error_budget
from .kernels import (
    KernelCertificationError,
    KernelSpec,
    kernel_gaussian,
    kernel_inverse_multiquadric,
    make_kernel,
)

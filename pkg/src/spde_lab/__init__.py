"""spde-lab: spectral laboratory for the additive stochastic heat equation.

Simulates du/dt = Lap u + noise (white in time, spatially homogeneous with a
parametric spectral density) on periodic space-time lattices, computes the
covariance and reproducing-kernel structure of the solution field by exact
frequency quadrature, and runs numerical locality / conditional-independence
experiments on it.
"""

from .errors import DalangConditionError, InvariantViolation
from .spectral import (Family, SpectralMeasure, dalang_condition,
                       dalang_partial_integral, density, density_integrable,
                       heat_kernel_closed_form, kernel_eval, truncation_tail)
from .lattice import (Field, Layout, Representation, SpaceTimeLattice,
                      forward_transform, inner0, inverse_transform, l2_inner,
                      l2_norm, norm0, random_band_limited, read_field,
                      refine_field, write_field, zero_field)
from .bumps import (radial_cutoff, space_time_bump, spatial_bump,
                    support_mask, time_profile)
from .fracops import (OperatorKind, OperatorSpec, apply, bessel_potential,
                      laplacian_power, localization_check, mixed_time_space_norm,
                      operator_J, q_exponent, remove_mean, riesz_derivative,
                      riesz_potential)
from .pde import (BumpSpec, HeatPropagator, fourier_bound_check,
                  riemann_convergence_study, solve_backward, solve_forward)
from .simulate import (NoiseModel, PathEnsemble, RNG_ID, increment_to_physical,
                       mc_covariance, mc_isometry, mc_isometry_batch,
                       mc_representer, mc_representer_field,
                       sample_noise_increment, simulate_u, spectral_amplitudes,
                       stochastic_integral)
from .rkhs import (RkhsElement, duality_check, element_from_h, heat_column,
                   krylov_norm, markov_guarantee, norm_equivalence_study,
                   representer, rkhs_inner, w12_norm)
from .markov import (CovarianceMatrix, RegionPartition, assemble_covariance,
                     band_width_study, column_gram_check, conditional_cov_screen,
                     covariance_oracle, kunsch_decomposition,
                     kunsch_orthogonality, region_partition)

__version__ = "0.1.0"

__all__ = [
    "DalangConditionError", "InvariantViolation",
    "Family", "SpectralMeasure", "density", "dalang_condition",
    "dalang_partial_integral", "density_integrable", "kernel_eval",
    "heat_kernel_closed_form", "truncation_tail",
    "Field", "Layout", "Representation", "SpaceTimeLattice",
    "forward_transform", "inverse_transform", "inner0", "norm0",
    "l2_inner", "l2_norm", "zero_field", "random_band_limited",
    "refine_field", "read_field", "write_field",
    "spatial_bump", "space_time_bump", "time_profile", "radial_cutoff",
    "support_mask",
    "OperatorKind", "OperatorSpec", "apply", "bessel_potential",
    "riesz_potential", "riesz_derivative", "laplacian_power", "operator_J",
    "remove_mean", "localization_check", "q_exponent", "mixed_time_space_norm",
    "HeatPropagator", "BumpSpec", "solve_forward", "solve_backward",
    "fourier_bound_check", "riemann_convergence_study",
    "NoiseModel", "PathEnsemble", "RNG_ID", "simulate_u",
    "sample_noise_increment", "increment_to_physical", "spectral_amplitudes",
    "stochastic_integral", "mc_isometry", "mc_isometry_batch",
    "mc_representer", "mc_representer_field", "mc_covariance",
    "RkhsElement", "representer", "element_from_h", "heat_column",
    "rkhs_inner", "duality_check", "krylov_norm", "w12_norm",
    "markov_guarantee", "norm_equivalence_study",
    "CovarianceMatrix", "RegionPartition", "covariance_oracle",
    "assemble_covariance", "region_partition", "conditional_cov_screen",
    "band_width_study", "kunsch_orthogonality", "kunsch_decomposition",
    "column_gram_check",
]

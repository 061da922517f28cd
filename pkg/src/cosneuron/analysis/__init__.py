"""Numerical companions: losses, periodic Gaussians, ReLU approximants, detection and ambiguity probes."""

from .detection import (
    DetectionResult,
    clwe_detection_test,
    clwe_source,
    constant_learner,
    null_source,
    oracle_learner,
    recovery_learner,
)
from .impossibility import (
    ProbeResult,
    phase_retrieval_feasible_set,
    sign_flip_operator,
    single_flip_eigen_extremes,
    spurious_norm_probe,
)
from .loss import (
    HermiteLossParams,
    hermite_coefficients,
    hermite_cosine_coefficient,
    hermite_normalized,
    parameter_recovery_edge_check,
    population_loss_closed_form,
    population_loss_monte_carlo,
    population_loss_series_tail,
    trivial_loss,
    weak_learning_edge,
)
from .periodic import arccos_modulus_bound, mills_tail_bound, periodic_gaussian_bounds, periodic_gaussian_density
from .polynomial import relation_polynomial, relation_polynomial_moments, relation_polynomial_variance
from .relu import ReluNetwork, relu_approximate_cosine, relu_parameters, relu_squared_loss, relu_target

__all__ = [
    "DetectionResult", "clwe_detection_test", "clwe_source", "constant_learner", "null_source",
    "oracle_learner", "recovery_learner",
    "ProbeResult", "phase_retrieval_feasible_set", "sign_flip_operator", "single_flip_eigen_extremes",
    "spurious_norm_probe",
    "HermiteLossParams", "hermite_coefficients", "hermite_cosine_coefficient", "hermite_normalized",
    "parameter_recovery_edge_check", "population_loss_closed_form", "population_loss_monte_carlo",
    "population_loss_series_tail", "trivial_loss", "weak_learning_edge",
    "arccos_modulus_bound", "mills_tail_bound", "periodic_gaussian_bounds", "periodic_gaussian_density",
    "relation_polynomial", "relation_polynomial_moments", "relation_polynomial_variance",
    "ReluNetwork", "relu_approximate_cosine", "relu_parameters", "relu_squared_loss", "relu_target",
]

"""Learning single cosine neurons: samplers, exact LLL, integer relations and recovery."""

from ._validation import ConfigError, CosNeuronError, DomainError, LatticeError, NumericError
from .exhaustive import ExhaustiveCosineRecovery, exhaustive_search, random_sphere_cover
from .intrel import DyadicVector, IntegerRelation, detect_integer_relation, truncate_dyadic
from .lattice import is_lll_reduced, lll_reduce, shortest_vector_bruteforce
from .recovery import (
    LatticeCosineRecovery,
    RecoveryConfig,
    RecoveryOutcome,
    recover_clwe,
    recover_cosine,
    recover_phase_retrieval,
    recovery_error,
)
from .sampling import Instance, NoiseModel, SampleBatch, make_instance

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "CosNeuronError", "DomainError", "LatticeError", "NumericError",
    "ExhaustiveCosineRecovery", "exhaustive_search", "random_sphere_cover",
    "DyadicVector", "IntegerRelation", "detect_integer_relation", "truncate_dyadic",
    "is_lll_reduced", "lll_reduce", "shortest_vector_bruteforce",
    "LatticeCosineRecovery", "RecoveryConfig", "RecoveryOutcome", "recover_clwe", "recover_cosine",
    "recover_phase_retrieval", "recovery_error",
    "Instance", "NoiseModel", "SampleBatch", "make_instance",
]

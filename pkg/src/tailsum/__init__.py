"""Tail probabilities of sums of dependent heavy-tailed risks under Archimedean dependence."""

from .archimedean import Family, GeneratorSpec, tau_to_param
from .bounds import BoundsPair, bounds_tail
from .errors import CapabilityError, DomainError, NumericalError, TailsumError
from .estimators import Estimator, EstimatorReport, Mode, TailProblem, run_replications, tune_parameter
from .marginals import ParetoMarginal, parse_marginals
from .samplers import RngStream

__all__ = [
    "Family",
    "GeneratorSpec",
    "tau_to_param",
    "BoundsPair",
    "bounds_tail",
    "CapabilityError",
    "DomainError",
    "NumericalError",
    "TailsumError",
    "Estimator",
    "EstimatorReport",
    "Mode",
    "TailProblem",
    "run_replications",
    "tune_parameter",
    "ParetoMarginal",
    "parse_marginals",
    "RngStream",
]

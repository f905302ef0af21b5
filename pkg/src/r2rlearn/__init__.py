"""Run-to-run learning control for repetitive 2D precision motion.

Norm-optimal ILC pre-step combined with Gaussian-process compensation of the
output mismatch inside a receding-horizon contouring optimizer, plus a
simulated "true" plant to exercise it.
"""

from r2rlearn.errors import (
    ConfigurationError,
    FittingError,
    NumericalError,
    RunError,
)
from r2rlearn.lti import LiftedSystem, StateSpaceModel, build_lifted, simulate_nominal

__all__ = [
    "ConfigurationError",
    "FittingError",
    "NumericalError",
    "RunError",
    "LiftedSystem",
    "StateSpaceModel",
    "build_lifted",
    "simulate_nominal",
]

__version__ = "0.1.0"

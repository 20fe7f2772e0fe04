"""Random multiplicative chaos on the circle and the 2-torus.

Submodules
----------
specfun    Bessel I0, theta functions and the Jacobi function G.
kernels    Coefficient families, correlation functions and kernels.
chaos      Phase streams, realizations of Q_N and exact moment oracles.
potential  Energies, potentials, capacities and local dimensions of grid measures.
series     Random cosine series under the Peyriere measure.
cli        Command-line front end.
"""

from .chaos import ChaosRealization, simulate_realization
from .errors import ChaosLabError, ConfigError, DomainError, ResolutionError, SingularityError
from .kernels import CoefficientSequence, KernelSpec
from .measures import GridMeasure
from .reports import StatReport
from .rng import PhaseStream

__version__ = "0.1.0"

__all__ = [
    "ChaosLabError", "ChaosRealization", "CoefficientSequence", "ConfigError", "DomainError",
    "GridMeasure", "KernelSpec", "PhaseStream", "ResolutionError", "SingularityError",
    "StatReport", "simulate_realization",
]

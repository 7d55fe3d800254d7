"""Dephasing dynamics of one and two particles on coupled-site networks.

Two independent routes compute averaged density matrices: Monte Carlo
trajectories of the stochastic Schrödinger equation (:mod:`oqnet.trajectory`)
and deterministic master equations (:mod:`oqnet.master`).
"""

__version__ = "0.1.0"

from .errors import DegenerateInputError, NonPhysicalStateError, UnsupportedSizeError, ValidationError
from .network import NetworkSpec, NoiseCalibration, calibrate_dephasing, paper_trimer, validate
from .records import EvolutionRecord

__all__ = [
    "__version__",
    "DegenerateInputError",
    "NonPhysicalStateError",
    "UnsupportedSizeError",
    "ValidationError",
    "NetworkSpec",
    "NoiseCalibration",
    "calibrate_dephasing",
    "paper_trimer",
    "validate",
    "EvolutionRecord",
]

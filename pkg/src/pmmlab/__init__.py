"""Porous medium model with slow reservoirs: particle simulation, exact oracle and PDE checks."""

from .errors import (
    AbsorbingStateError,
    NumericalError,
    OracleResidualError,
    PMMError,
    StabilityError,
    ValidationError,
)
from .kmc import Topology, simulate, simulate_ensemble
from .lattice import Configuration, ModelParams
from .pde import BoundaryKind, SpaceTimeField, solve
from .testfunctions import TestFunction

__version__ = "0.1.0"

__all__ = [
    "AbsorbingStateError",
    "BoundaryKind",
    "Configuration",
    "ModelParams",
    "NumericalError",
    "OracleResidualError",
    "PMMError",
    "SpaceTimeField",
    "StabilityError",
    "TestFunction",
    "Topology",
    "ValidationError",
    "simulate",
    "simulate_ensemble",
    "solve",
]

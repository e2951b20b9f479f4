"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``ValidationError`` -> 1,
``NumericalError`` (and subclasses) -> 2.
"""


class PMMError(Exception):
    """Base class for all errors raised by pmmlab."""


class ValidationError(PMMError, ValueError):
    """A parameter, configuration or input violates its documented bounds."""


class NumericalError(PMMError, RuntimeError):
    """A numerical procedure failed (instability, residual breach, ...)."""


class StabilityError(NumericalError):
    """The explicit PDE scheme left the invariant region [0, 1]."""


class AbsorbingStateError(NumericalError):
    """The Markov chain reached a state with zero total jump rate."""


class OracleResidualError(NumericalError):
    """An exact-oracle identity was violated beyond tolerance."""

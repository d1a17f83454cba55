"""Exception types raised by rewindq."""


class RewindqError(Exception):
    """Base class for all library errors."""


class ValidationError(RewindqError, ValueError):
    """An input violates a documented invariant (non-unitary gate, bad probability, ...)."""


class ShapeError(RewindqError, ValueError):
    """Array or grid shapes are incompatible."""


class ResourceError(RewindqError):
    """A simulation would exceed a configured width or bond-dimension cap."""


class TopologyError(RewindqError):
    """A gate is not supported by the chosen backend (e.g. non-nearest-neighbour for MPS)."""


class FitError(RewindqError):
    """A decay fit could not be performed (too few usable points)."""


class ConfigError(RewindqError, ValueError):
    """An experiment configuration is inconsistent."""


class NumericalError(RewindqError):
    """A numerical routine (eigensolver, SVD) failed."""


class DegeneracyError(RewindqError):
    """A tensor network contracts to the zero vector."""

"""Exception hierarchy shared across the package."""


class GeoRelError(Exception):
    """Base class for all package errors."""


class DimensionError(GeoRelError, ValueError):
    """Array shapes do not agree with the declared geometry."""


class DomainError(GeoRelError, ValueError):
    """An argument lies outside the domain of a geometric operation."""


class NonFiniteError(GeoRelError, ArithmeticError):
    """A loss or function evaluation produced NaN or infinity."""

    def __init__(self, message, index=None, epoch=None, batch=None):
        super().__init__(message)
        self.index = index
        self.epoch = epoch
        self.batch = batch


class InconsistentAxiomError(GeoRelError, ValueError):
    """An EL axiom that no box interpretation can satisfy."""


class DataFormatError(GeoRelError, ValueError):
    """A malformed input record; carries the offending line number."""

    def __init__(self, reason, path=None, line=None):
        where = f"{path}:{line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")
        self.reason = reason
        self.path = path
        self.line = line


class CheckpointError(GeoRelError):
    """A checkpoint is missing, unreadable or belongs to another model."""

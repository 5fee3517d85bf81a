"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A distribution or algorithm parameter is outside its valid range."""


class RangeError(OverflowError):
    """A requested quantity is not representable in double precision."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function or operation."""


class UnsupportedParameterError(NotImplementedError):
    """The operation exists only for a restricted parameter set."""


class StructuralError(RuntimeError):
    """A tree operation referenced a stale or invalid element."""


class StateError(RuntimeError):
    """An operation requires a feature that is switched off on this object."""


class TruncationWarning(UserWarning):
    """The truncated product sampler was run below its configured minimum."""

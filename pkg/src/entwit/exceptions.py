"""Exception types raised across the package."""


class EntwitError(Exception):
    """Base class for package errors."""


class DimensionError(EntwitError, ValueError):
    """Matrix shape and subsystem dimensions disagree."""


class ValidationError(EntwitError, ValueError):
    """An operator fails a numerical validity check (Hermiticity, trace, positivity)."""


class NoNptWitness(EntwitError, ValueError):
    """A witness from the partial transpose was requested for a PPT state."""


class NotWitnessable(EntwitError, ValueError):
    """A separable detector was requested for a block-positive operator."""


class NotEntangled(EntwitError, ValueError):
    """An operation that needs an entangled state received a separable one."""


class NoFamily(NotEntangled):
    """Separable states do not belong to any entangled family."""


class PreconditionError(EntwitError, ValueError):
    """Input violates a documented precondition."""


class InconsistentDelta(EntwitError, ValueError):
    """The supplied ratio bound does not yield a valid decomposition."""


class EmptySample(EntwitError, ValueError):
    """A witness sample is empty where at least one element is needed."""


class ParseError(EntwitError, ValueError):
    """An operator document is malformed (not JSON, missing fields, bad entries)."""

"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: validation problems exit 1,
convergence failures exit 2, precondition/resource violations exit 3.
"""


class SchurStateError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SchurStateError):
    """Malformed input: bad file contents, inconsistent model data."""


class DimensionError(ValidationError):
    """Shape or index mismatch between operands."""


class ConvergenceError(SchurStateError):
    """An infinite-volume quantity failed to converge.

    Carries the last partial result and the tail estimate at the point
    where iteration gave up, so callers can report what was achieved.
    """

    def __init__(self, message, last_partial=None, tail_estimate=None):
        super().__init__(message)
        self.last_partial = last_partial
        self.tail_estimate = tail_estimate


class PreconditionError(SchurStateError):
    """A documented precondition of an operation was violated."""


class DomainError(PreconditionError):
    """Input outside the mathematical domain (e.g. log of a singular matrix)."""


class ResourceLimitError(PreconditionError):
    """A configured resource cap (dense tensor size, iteration budget) was hit."""


class GeometryError(PreconditionError):
    """Regions overlap or lie outside the geometry required by an operation."""

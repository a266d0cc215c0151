"""Exception hierarchy shared by every module.

The CLI maps each class to an exit status, so raise the most specific one.
"""


class WorkbenchError(Exception):
    """Base class for all errors raised by sievebench."""


class ValidationError(WorkbenchError, ValueError):
    """Malformed input: bad JSON document, unknown field, out-of-range edit."""


class DomainError(WorkbenchError, ValueError):
    """An operation's precondition does not hold for the given arguments."""


class DimensionError(DomainError):
    """A geometric object has the wrong (affine) dimension for the operation."""


class ResourceError(WorkbenchError):
    """The requested computation exceeds a configured size ceiling."""

    def __init__(self, message, estimated_cost=None):
        super().__init__(message)
        self.estimated_cost = estimated_cost


class CounterexampleError(WorkbenchError):
    """An object whose existence is guaranteed by theory could not be found.

    ``premise_holds`` tells whether the guaranteeing hypothesis was satisfied
    by the input. Only when it is True does the error signal an actual
    violation; otherwise the search simply failed outside the theorem's scope.
    """

    def __init__(self, message, premise_holds=True):
        super().__init__(message)
        self.premise_holds = premise_holds

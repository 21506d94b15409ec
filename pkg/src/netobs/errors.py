class NetObsError(Exception):
    """Base class for all errors raised by netobs."""


class ParameterError(NetObsError, ValueError):
    pass


class DivergenceError(NetObsError):
    """A simulated state or filter covariance became non-finite or blew past the crash threshold."""


class NumericalError(NetObsError):
    """A matrix that must be positive definite was not (singular innovation covariance, etc.)."""

    def __init__(self, message, condition=None):
        if condition is not None:
            message = f"{message} (condition number {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class AggregationError(NetObsError):
    pass

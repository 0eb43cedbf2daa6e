"""Exception hierarchy shared by all opbridge modules."""


class OpBridgeError(Exception):
    """Base class for every error raised by opbridge."""


class InvalidInputError(OpBridgeError, ValueError):
    """Malformed input: wrong shape, non-finite entries, bad index."""


class DomainError(OpBridgeError, ValueError):
    """Argument outside the domain of the operation (e.g. r <= 0, t >= T)."""


class LimitUndefinedError(OpBridgeError, ValueError):
    """A requested limit does not exist for the given matrix."""


class PreconditionError(OpBridgeError, ValueError):
    """A documented precondition of the operation does not hold."""


class RefusedError(OpBridgeError):
    """Operation refused because the model does not satisfy its hypothesis."""


class InvalidComparisonError(OpBridgeError, ValueError):
    """Two models cannot be compared (dimension or terminal time mismatch)."""


class InsufficientResolutionError(OpBridgeError, ValueError):
    """Time grid does not resolve the approach to the terminal time."""


class NumericalFailureError(OpBridgeError, ArithmeticError):
    """A numerical routine failed to converge or to reach its tolerance.

    ``diagnostics`` carries whatever the failing routine could report
    (achieved error, iteration counts, condition numbers).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class DecompositionUnstableError(NumericalFailureError):
    """Spectral basis too ill-conditioned to trust."""

"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent input data."""


class UnsupportedError(InputError):
    """A valid request the library deliberately does not handle."""


class NumericalError(RuntimeError):
    """An iterative method failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateGradientError(InputError):
    """The objective gradient vanishes, so no tangent half-space exists."""


class WellPosednessError(InputError):
    """Observed data violate a well-posedness condition.

    ``condition`` is one of ``"a"``, ``"b"``, ``"c"``; ``index`` names the
    offending observation (position within its label group) when known.
    """

    def __init__(self, message, condition, index=None):
        super().__init__(message)
        self.condition = condition
        self.index = index


class CertificateError(RuntimeError):
    """An optimality certificate failed one of its checks."""

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class AuditError(AssertionError):
    """Model-size audit mismatch; ``details`` maps item -> (expected, actual)."""

    def __init__(self, message, details):
        super().__init__(message)
        self.details = details

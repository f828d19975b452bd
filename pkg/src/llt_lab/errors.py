"""Exception hierarchy for the lab."""


class LabError(Exception):
    """Base class for all lab errors."""


class ParameterError(LabError, ValueError):
    """Invalid parameter passed to a constructor or an operation."""


class UnsupportedDimensionError(ParameterError):
    pass


class UnsupportedOrderError(ParameterError):
    pass


class UnboundedDensityError(LabError):
    """The requested density (or one of its projections) is not bounded."""


class WindowError(LabError):
    """Frequency window too small for the requested computation."""


class InsufficientWindowError(WindowError):
    """Estimated CF tail mass beyond the grid window exceeds tolerance."""

    def __init__(self, message, tail=None, tolerance=None):
        super().__init__(message)
        self.tail = tail
        self.tolerance = tolerance


class DegenerateTruncationError(LabError):
    pass


class ModeMismatchError(LabError):
    """Symmetric-mode bound requested for a law with non-vanishing third moments."""


class PreconditionError(LabError):
    pass


class ConfigError(LabError):
    """Configuration parse/validation error, carrying the offending line."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

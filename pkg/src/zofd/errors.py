"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Invalid matrix or vector dimensions (d < 1, ell < 1 or ell > d)."""


class ParameterError(ValueError):
    """A scalar parameter violates its precondition (h <= 0, repeats < 2, ...)."""


class ConfigError(ValueError):
    """Invalid experiment configuration or registry misuse."""


class DomainError(ValueError):
    """Metric input outside its mathematical domain."""


class DegenerateSampleError(RuntimeError):
    """A probability-zero degenerate sample survived one resample."""


class EvaluationError(RuntimeError):
    """An objective returned a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point

"""Exception types raised across the package."""


class DomainError(ValueError):
    """A numeric argument lies outside the range where a quantity is defined."""


class ValidationError(ValueError):
    """Input data violates a structural invariant (metric axioms, weights, shapes)."""


class UnsupportedOperation(NotImplementedError):
    """The operation is not defined for this kind of space."""


class InfeasibleDiscretization(RuntimeError):
    """Greedy cannot make progress: some cloud point is out of reach of every candidate."""

    def __init__(self, point_index, message=None):
        self.point_index = int(point_index)
        super().__init__(
            message
            or f"cloud point {self.point_index} is not within the cover radius of any candidate"
        )


class ConfigError(ValueError):
    """A run configuration field is invalid; ``field`` names it."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")

"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shape or size is incompatible with the operation."""


class MissingGroupError(ValueError):
    """A group code in 0..k-1 has no samples."""


class SchemaError(ValueError):
    """Input data does not match the declared schema."""


class NumericError(ArithmeticError):
    """A quantity violates a guarantee it should satisfy up to roundoff."""


class DivergenceError(RuntimeError):
    """Iterative optimization produced a non-finite objective value."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class SplitError(RuntimeError):
    """A randomized split or subsample could not satisfy group coverage."""

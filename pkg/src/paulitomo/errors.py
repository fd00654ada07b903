"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ToolkitError, ValueError):
    """An input failed a documented precondition."""


class DimensionError(ValidationError):
    """Operands have incompatible or unsupported dimensions."""


class InvalidStateError(ValidationError):
    """A matrix or Bloch vector is not a valid quantum state."""


class InvalidMeasurementError(ValidationError):
    """A POVM or basis set fails positivity, closure, or unbiasedness checks."""


class InvalidChannelError(ValidationError):
    """Channel parameters or a Choi matrix violate complete positivity / trace preservation."""


class SingularConfigurationError(ValidationError):
    """A Fisher evaluation hit a vanishing outcome probability with nonzero sensitivity."""


class InfeasibleRegionError(ValidationError):
    """A linear constraint set admits no feasible point within tolerance."""


class NonConvergenceError(ToolkitError):
    """An iterative solver exhausted its budget before reaching tolerance."""

    def __init__(self, message, *, iterations=None, residuals=None):
        super().__init__(message)
        self.iterations = iterations
        self.residuals = dict(residuals or {})


class DegenerateIterateError(ToolkitError):
    """A direction-search iterate was annihilated by the orthogonal projection."""


class PartialResultError(NonConvergenceError):
    """Direction estimation ran out of restarts; carries whatever was recovered."""

    def __init__(self, message, *, partial=None, **kwargs):
        super().__init__(message, **kwargs)
        self.partial = partial

"""Exception hierarchy shared by all modules."""


class BrownshiftError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(BrownshiftError):
    """Operands live on incompatible truncations."""


class TruncationError(BrownshiftError):
    """An operation would push coefficient mass past the truncation.

    ``lost_mass`` is the l2 norm of the coefficients that would be dropped and
    ``step`` (when set) is the power-iteration step at which it happened.
    """

    def __init__(self, message, lost_mass=0.0, step=None):
        super().__init__(message)
        self.lost_mass = float(lost_mass)
        self.step = step


class ConditioningError(BrownshiftError):
    """A numerical rank or Gram check failed its tolerance."""


class ValidationError(BrownshiftError):
    """Input data violates a constructor precondition."""


class NumericalInstabilityError(BrownshiftError):
    """A series expansion failed to decay."""


class IterationError(BrownshiftError):
    """An iterative method did not converge; ``estimate`` holds the last value."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class StructuralError(BrownshiftError):
    """Two subspace bases do not share the labelled structure an operation needs."""

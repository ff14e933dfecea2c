"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operands have incompatible alphabet sizes."""


class NotADistribution(ValueError):
    """A probability vector violates range or normalization tolerances."""


class DomainError(ValueError):
    """A scalar argument lies outside its admissible range."""


class NumericalFailure(RuntimeError):
    """An iterative numerical routine exceeded its iteration cap."""


class SearchBudgetExceeded(RuntimeError):
    """Chamber search tested more regions than the defensive cap allows."""


class BudgetExceeded(RuntimeError):
    """Brute-force enumeration would generate too many candidates."""


class NoConvergence(RuntimeError):
    """The saddle-point solver failed to close the duality gap in time."""


class InfeasibleDistortion(RuntimeError):
    """No row-stochastic mechanism satisfies the distortion budget."""

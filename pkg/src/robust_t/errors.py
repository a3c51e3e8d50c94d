"""Exception types shared across the package."""


class NotPositiveDefinite(ValueError):
    """A matrix that must be symmetric positive definite is not."""


class DimensionMismatch(ValueError):
    """Operands have incompatible shapes."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class DegenerateData(ValueError):
    """The dataset cannot support estimation (too few or collapsed rows)."""

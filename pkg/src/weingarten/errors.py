"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the set on which an operation is defined."""


class PreconditionError(ValueError):
    """A lemma hypothesis does not hold for the supplied input."""


class ConfigurationError(ValueError):
    """Invalid discretization or run configuration."""


class AdmissibilityError(DomainError):
    """Curvature vector left the Garding cone at some grid node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DegenerateBodyError(DomainError):
    """Convex body is degenerate (W not positive definite, zero volume, ...)."""


class SearchFailure(RuntimeError):
    """A scan over candidates produced no admissible witness."""

    def __init__(self, message, closest=None):
        super().__init__(message)
        self.closest = closest

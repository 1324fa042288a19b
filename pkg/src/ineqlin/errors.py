"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where a functional is defined."""


class DesignError(ValueError):
    """A sampling design cannot supply what an estimator needs."""

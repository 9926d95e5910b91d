class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ResourceCapError(RuntimeError):
    """Requested window exceeds a configured size cap."""

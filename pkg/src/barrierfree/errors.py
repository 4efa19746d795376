class DimensionError(ValueError):
    """Array shape or axis does not fit the operation."""


class DomainError(ValueError):
    """Argument lies outside the mathematical domain of the operation."""


class ConfigError(ValueError):
    """Invalid or unknown configuration field."""


class OrderingError(ValueError):
    """Event stream is not ordered by timestamp."""

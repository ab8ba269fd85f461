class ConfigError(ValueError):
    """Invalid parameter combination (bad budget, missing timestamps, ...)."""


class TraceFormatError(ValueError):
    """Unreadable or malformed trace input."""


class InstrumentationError(RuntimeError):
    """Requested a statistic that needs instrumentation that was not enabled."""

"""Exception types shared across the toolkit."""


class SharedLanderError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SharedLanderError):
    """Invalid configuration: unknown keys, unsupported basis, bad parameter values."""


class DataError(SharedLanderError):
    """Input data cannot support the requested computation."""


class InsufficientDataError(DataError):
    """Fewer samples than the estimator needs."""


class SingularDataError(DataError):
    """Rank-deficient normal equations; a positive ridge would regularize them."""


class DegenerateDataError(DataError):
    """Zero-variance data where a test statistic is undefined."""


class LogFormatError(DataError):
    """A trial log file does not match the expected schema."""


class ModelError(SharedLanderError):
    """A learned model is unusable for control."""


class NonStabilizableError(ModelError):
    """The Riccati iteration failed to converge on this model."""


class CostSpecError(ModelError):
    """The quadratic cost weights violate their definiteness requirements."""

"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Rejected input: wrong dimension, invalid parameter, bad config value."""


class ConfigError(ValidationError):
    """Configuration document could not be parsed or failed validation."""


class IllConditionedError(RuntimeError):
    """Least-squares system is rank deficient and no ridge was requested."""


class DegenerateMetricError(RuntimeError):
    """An error metric is undefined, e.g. R^2 against a constant truth."""


class UnstableStepError(RuntimeError):
    """Explicit flow step would violate the dt * max|K| < 1 guard or went non-finite."""

    def __init__(self, message, dt_k=None):
        super().__init__(message)
        self.dt_k = dt_k


class StageError(RuntimeError):
    """Wraps a failure inside a pipeline stage so the CLI can attribute it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause

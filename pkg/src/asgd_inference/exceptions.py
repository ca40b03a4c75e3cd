"""Exception types raised by the package."""


class DimensionError(ValueError):
    """Vector or matrix shapes disagree with the declared dimension."""


class EmptyStateError(ValueError):
    """An estimate was requested before any observation was processed."""


class InvalidEstimateError(ValueError):
    """A covariance estimate cannot support the requested inference."""


class DataError(ValueError):
    """Malformed input data (bad arity, unparsable number, missing file)."""


class ConfigError(ValueError):
    """Invalid experiment or estimator configuration."""

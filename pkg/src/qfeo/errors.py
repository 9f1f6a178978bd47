"""Exception hierarchy shared across the package."""


class QfeoError(Exception):
    """Base class for all package-specific failures."""


class CapacityError(QfeoError):
    """Simulator or feature-map size limit exceeded."""


class EncodingError(QfeoError):
    """Feature vector cannot be encoded by the configured feature map."""


class DataError(QfeoError):
    """Dataset ingestion or splitting failed."""


class MetricError(QfeoError):
    """A score is undefined for the given inputs (e.g. single-class AUC)."""


class TrainingError(QfeoError):
    """A classifier failed to fit (non-convergence, degenerate labels)."""


class NumericError(QfeoError):
    """A numerical routine failed beyond recoverable jitter."""


class ConfigError(QfeoError):
    """Experiment configuration is invalid; message carries the field path."""

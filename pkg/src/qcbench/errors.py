"""Exception types shared across the package."""


class QCError(Exception):
    """Base class for all data, model and configuration errors."""


class CorpusError(QCError, ValueError):
    """A corpus or stop-word file is malformed or inconsistent with the taxonomy."""


class FeatureError(QCError, ValueError):
    pass


class DatasetError(QCError, ValueError):
    """Dataset shape, label or feature-value problem."""


class HyperparameterError(QCError, ValueError):
    pass


class ModelFormatError(QCError):
    """A model artifact cannot be decoded (corrupt, truncated or wrong version)."""


class BenchmarkError(QCError, ValueError):
    pass

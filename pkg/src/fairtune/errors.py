"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes, so new error conditions should reuse
one of the existing classes rather than invent a parallel hierarchy.
"""


class FairtuneError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(FairtuneError):
    """Bad arguments, unknown names, shape mismatches, malformed configs."""


class DataError(FairtuneError):
    """Invalid data content: non-binary cells, empty strata, missing values."""


class MetricError(DataError):
    """A metric is undefined for the given data (e.g. single-class labels)."""


class GenerationError(DataError):
    """Synthetic data generation could not satisfy its own contract."""


class NumericError(FairtuneError):
    """Non-finite values encountered during optimization."""

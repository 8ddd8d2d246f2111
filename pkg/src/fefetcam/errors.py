"""Exception hierarchy shared by all simulator modules."""


class FefetCamError(Exception):
    """Base class for all simulator errors."""


class InvalidParameterError(FefetCamError):
    """A device or cell parameter is non-finite or out of its valid range."""


class ConfigurationError(FefetCamError):
    """An experiment or ladder configuration is infeasible or malformed."""


class NumericalError(FefetCamError):
    """A numerical routine failed to converge; indicates a bug, not bad data."""


class InvalidWriteError(FefetCamError):
    """A write targets an out-of-range row or symbol."""


class EncodingError(FefetCamError):
    """A sequence contains characters outside the ACGT alphabet."""


class QueryError(FefetCamError):
    """A search query is inconsistent with the index it is run against."""

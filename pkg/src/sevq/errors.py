"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration and usage
problems exit 2, bad input data exits 3, violated internal invariants
exit 4.
"""


class SevqError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SevqError):
    """A parameter or path supplied by the caller is unusable."""


class DataError(SevqError):
    """Input data violates a documented precondition."""


class ModelFormatError(DataError):
    """A model file is corrupt or has an unsupported format version."""


class InternalError(SevqError):
    """An internal invariant failed; indicates a bug, not bad input."""

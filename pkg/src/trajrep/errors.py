"""Exception types shared across the package.

The CLI maps these onto exit codes, so raising the right class matters
more than the message text.
"""


class TrajrepError(Exception):
    """Base class for package errors."""


class ConfigError(TrajrepError):
    """Bad or contradictory configuration (exit code 1)."""


class DataError(TrajrepError):
    """Malformed or missing input data (exit code 2)."""


class StateError(TrajrepError):
    """Operation attempted in the wrong lifecycle state (exit code 1)."""


class VerificationError(TrajrepError):
    """A verification step ran and failed (exit code 3)."""

"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (see cli.EXIT_CODES).
"""


class IndistackError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(IndistackError):
    """Invalid configuration: bad dimensions, unknown names, bad files."""


class ShapeError(IndistackError):
    """An array argument has the wrong shape or dtype for the operation."""


class TrainingError(IndistackError):
    """Training produced non-finite values or diverged."""


class NumericalError(IndistackError):
    """A numerical routine failed (e.g. a matrix that must be PD is not)."""

"""Exception hierarchy shared across the package.

The CLI maps these onto machine-readable error categories and exit codes:
config errors exit 2, data errors 3, numeric errors 4, anything else 5.
"""


class CurvebandError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(CurvebandError):
    """Invalid configuration: bad flag combinations, malformed config files."""


class DataError(CurvebandError):
    """Malformed or inconsistent input data (CSV schema violations, bad ids)."""


class NumericError(CurvebandError):
    """Numerical failure: non-convergence, rejection-loop bound, degenerate input."""

"""Exception types shared across the package.

Two failure families matter to callers (and to the CLI exit-code contract):
invalid inputs or data, and numerical breakdowns that no input validation
can rule out ahead of time.
"""


class RydstatsError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RydstatsError, ValueError):
    """Invalid parameter, configuration or data file (CLI exit code 2)."""


class NumericalError(RydstatsError, ArithmeticError):
    """Numerical failure: singular/ill-conditioned matrix, no convergence
    of a root search, inadequate truncation (CLI exit code 3)."""

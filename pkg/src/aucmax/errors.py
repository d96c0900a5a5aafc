"""Exception types shared across the package.

The CLI maps ValidationError to exit status 1 and NumericalError to exit
status 2; everything else is a bug.
"""


class AucmaxError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AucmaxError):
    """Bad inputs: shape mismatches, malformed files, invalid configs."""


class NumericalError(AucmaxError):
    """A computation produced a non-finite quantity and the run must abort."""

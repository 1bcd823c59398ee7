"""Exception hierarchy shared by all photostat modules.

Two error classes matter to callers: :class:`DomainError` for inputs
outside an operation's mathematical domain, and :class:`NumericError`
for in-domain computations that failed to converge.  The CLI maps them
to distinct exit codes.
"""

from __future__ import annotations


class PhotostatError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PhotostatError, ValueError):
    """An argument lies outside the operation's mathematical domain."""


class UnsupportedConfigurationError(DomainError):
    """A detector/outcome configuration the inference formulas do not cover."""


class NumericError(PhotostatError, ArithmeticError):
    """A numerical procedure failed to converge.

    ``partial`` carries the best estimate available when the failure
    occurred (or ``None`` when nothing useful was accumulated).
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial

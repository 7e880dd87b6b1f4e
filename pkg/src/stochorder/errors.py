"""Exception hierarchy shared by the services, the CLI and the HTTP layer."""

from __future__ import annotations


class StochOrderError(Exception):
    """Base class for every error raised by stochorder."""


class DomainError(StochOrderError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(StochOrderError, ArithmeticError):
    """A series, continued fraction or limit sequence did not converge."""


class TailToleranceError(StochOrderError):
    """A truncation tolerance cannot be met within the table-size cap."""


class SupportError(StochOrderError):
    """Supports are not intervals, are not nested, or are of incompatible kinds."""


class GridError(StochOrderError, ValueError):
    """A check grid is malformed or has too many degenerate points."""


class QuantileBracketError(StochOrderError):
    """Bisection could not bracket the requested quantile."""


class SpecParseError(StochOrderError, ValueError):
    """A distribution expression does not match the grammar."""


def require(condition: bool, message: str, error: type[StochOrderError] = DomainError) -> None:
    if not condition:
        raise error(message)

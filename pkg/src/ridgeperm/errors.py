"""Exception hierarchy.

Every error raised by the library derives from :class:`RidgePermError`, which
itself is a ``ValueError`` so callers that only care about bad input can catch
that.  The CLI maps :class:`InputError` subclasses to exit code 2 and
:class:`DegenerateStatistic` subclasses to exit code 3.
"""

from __future__ import annotations


class RidgePermError(ValueError):
    """Base class for all library errors."""


class InputError(RidgePermError):
    """Malformed or inconsistent user input."""


class DegenerateStatistic(RidgePermError):
    """A test statistic is undefined for the supplied data."""


class AllZeroNuisance(InputError):
    """Every singular value of the nuisance matrix is below tolerance."""


class SingularAtZero(InputError):
    """An unpenalised (lambda = 0) projection was requested but Z'Z is singular."""


class NotLowDimensional(InputError):
    """A classical (OLS-based) method was asked to run with q >= n."""


class DegenerateFolds(InputError):
    """Cross-validation fold assignment produced an empty fold."""


class LengthMismatch(InputError):
    """A transformation was applied to a vector of the wrong length."""


class DimensionMismatch(InputError):
    """Statistic matrix shape does not match what the combiner expects."""


class ParseError(InputError):
    """A CSV cell or config value could not be parsed."""


class MissingColumn(InputError):
    """A requested column is absent from the CSV header."""


class NonFinite(InputError):
    """NaN or infinite values in the input data."""


class UnknownPreset(InputError):
    """No scenario preset is registered under the requested name."""


class ZeroVariance(DegenerateStatistic):
    """A correlation argument is constant after centering."""

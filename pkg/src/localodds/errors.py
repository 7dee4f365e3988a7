"""Exception and warning types shared across the package."""

from __future__ import annotations


class LocalOddsError(Exception):
    """Base class for all package errors."""


class NumericalError(LocalOddsError):
    """A computation could not be carried out on the given data."""


class DataFormatError(LocalOddsError):
    """Input data could not be read or validated."""


class AllZeroWeightsError(NumericalError):
    """Every kernel value at the evaluation point is zero.

    Possible for compact-support kernels far from the data; signals the
    point is outside the estimable range.
    """


class DegenerateDataError(NumericalError):
    """Bandwidth selection is undefined (constant covariate or response)."""


class EmptyCellError(NumericalError):
    """A cell estimate is exactly zero where a positive value is required."""


class EmptyDenominatorError(NumericalError):
    """The odds-ratio denominator product of counts is zero."""


class DegenerateMarginError(NumericalError):
    """A row or column margin of the table is zero."""


class SeparationError(NumericalError):
    """Logistic-regression likelihood is unbounded (or design is collinear)."""


class NoConvergenceError(NumericalError):
    """Iterative fit did not converge within the iteration budget."""


class InsufficientResamplesError(NumericalError):
    """Too few bootstrap resamples to resolve the requested tail quantiles."""


class ParseError(DataFormatError):
    """A dataset row failed to parse; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyFileError(DataFormatError):
    """The dataset file contains no observation rows."""


class BoundaryPointWarning(UserWarning):
    """Evaluation point lies outside the bandwidth-interior of the support.

    The computation proceeds but the result is subject to boundary bias.
    """


class DensityFloorWarning(UserWarning):
    """The density estimate fell below the floor and was clamped."""


class SingularDenominatorWarning(UserWarning):
    """The alternating reciprocal sum in the bias-corrected amendment is
    numerically zero; the result is flagged invalid."""

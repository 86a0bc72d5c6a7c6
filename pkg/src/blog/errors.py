"""Exception hierarchy.

Two branches: ValidationError for inputs that violate a documented
precondition, NumericalError for computations that fail on otherwise
well-formed input.  The command line maps them to exit codes 1 and 2.
"""


class BlogError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(BlogError):
    """Input data or configuration violates a documented precondition."""


class NumericalError(BlogError):
    """A numerical procedure failed: singularity, degeneracy, divergence."""


# panel ingestion

class MissingCell(ValidationError):
    """A required cell is absent or cannot be parsed as a number."""


class RaggedPanel(ValidationError):
    """Subjects do not share one common set of observation times."""


class DuplicateKey(ValidationError):
    """The same (subject, time) pair appears more than once."""


# design construction

class TooFewTimePoints(ValidationError):
    """Differencing needs at least two time points."""


class SingularCovariance(NumericalError):
    """A covariance matrix is not symmetric positive definite."""


class RankDeficientDesign(NumericalError):
    """A level design matrix does not have full column rank."""


# conjugate linear model

class SingularDesign(NumericalError):
    """The cross-product matrix of a design is numerically singular."""


class UnderdeterminedSystem(NumericalError):
    """Fewer observations than coefficients; least squares is not unique."""


class NonPositiveG(ValidationError):
    """A prior scale multiplier g must be strictly positive."""


# Bayes factors

class InvalidR2(ValidationError):
    """An R-squared value lies outside [0, 1]."""


class DegenerateDf(ValidationError):
    """Degrees of freedom too small for the evidence formula."""


class ZeroDesign(ValidationError):
    """A design matrix is identically zero."""


class DegenerateBeta(NumericalError):
    """A Beta-function argument is non-positive."""


# group-sparse sampler

class DimensionMismatch(ValidationError):
    """Array shapes are inconsistent with the declared group layout."""


class NonConvergentSigma(NumericalError):
    """The noise-variance chain left the positive reals."""


class EmptyChain(ValidationError):
    """A summary was requested from zero retained draws."""

"""Shared exception types.

Every module raises these rather than bare ValueError so callers (and the CLI
exit-code mapping) can tell configuration mistakes, size caps, and numerical
failures apart.
"""


class InvalidParameterError(ValueError):
    """A parameter is outside its documented domain (e.g. dilation scale <= 0)."""


class InvalidRequestError(ValueError):
    """A request object violates an operation's precondition."""


class SizeLimitError(ValueError):
    """An enumeration or integration dimension exceeds its configured cap."""


class IncompleteWeightsError(KeyError):
    """A sieve transform was asked for a block with no supplied weight."""


class AccuracyError(RuntimeError):
    """Quadrature could not meet the requested tolerance.

    Carries the best available estimate and its error indicator so callers can
    decide whether to degrade gracefully.
    """

    def __init__(self, message, value, error_estimate):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class UnsupportedIntegrandError(ValueError):
    """The integrand does not satisfy the decay hypotheses of the routine."""


class OutOfTruncationError(ValueError):
    """A contour-sum term outside the |K'| <= 3 truncation was requested."""


class UnsupportedRangeError(ValueError):
    """A closed form was requested outside its support-range validity."""


class SamplerFailureError(RuntimeError):
    """A Haar draw failed structural checks (eigensolver or pairing)."""


class EstimateInvalidError(RuntimeError):
    """Too many sampler failures: the Monte Carlo estimate is not trustworthy."""

"""Exception types shared across the package."""


class PlapLabError(Exception):
    """Base class for all package errors."""


class EvaluationDomainError(PlapLabError):
    """A scalar function was evaluated outside its domain (e.g. log of a non-positive value)."""


class QuadratureError(PlapLabError):
    """Adaptive quadrature failed to converge within its evaluation budget.

    Carries the best available estimate so callers can decide whether to proceed.
    """

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class RangeError(PlapLabError):
    """Target value lies outside the range of the function on the given bracket."""


class BranchError(PlapLabError):
    """Non-monotone behaviour detected where a single monotone branch was required."""


class TransformationDomainError(PlapLabError):
    """Group parameter left the domain of validity of a closed-form transformation."""


class FoldError(PlapLabError):
    """A point map produced a non-monotone image (fold), so re-gridding is impossible."""


class SingularAxisError(PlapLabError):
    """Evaluation at r = 0 with a non-vanishing m/r source term."""


class UnstableStepError(PlapLabError):
    """Time step produced non-finite values or norm blow-up."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class StepRejectionError(PlapLabError):
    """Gradient left the declared working branch during a step."""


class TrackingError(PlapLabError):
    """Interface tracking failed (no crossing or multiple crossings in the scan window)."""


class ConfigError(PlapLabError):
    """Run configuration failed schema validation."""

"""Exception hierarchy shared across the package."""


class RobustSMError(Exception):
    """Base class for all package errors."""


class InputError(RobustSMError, ValueError):
    """Malformed or out-of-contract input."""


class DomainViolationError(InputError):
    """Observation lies outside the model's sample space."""


class SingularPointError(InputError):
    """Observation sits on a boundary where sufficient-statistic derivatives diverge."""


class ModelError(RobustSMError, ValueError):
    """Model parameters violate a validity requirement (e.g. not normalizable)."""


class ConvergenceError(RobustSMError, RuntimeError):
    """Iterative routine hit its iteration limit.

    Carries the last iterate in ``last_iterate`` so callers can inspect it.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class NotPositiveDefiniteError(RobustSMError, RuntimeError):
    """A matrix required to be positive definite is not."""


class AssumptionViolatedError(RobustSMError, ValueError):
    """A theorem precondition does not hold for the supplied arguments."""


class DiagnosticsError(RobustSMError, RuntimeError):
    """Irrepresentability diagnostics could not be evaluated."""

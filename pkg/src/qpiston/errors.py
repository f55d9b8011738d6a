"""Exception hierarchy shared by all qpiston modules."""


class QPistonError(Exception):
    """Base class for every error raised by qpiston."""


class BasisOverflowError(QPistonError, ValueError):
    """Requested oscillator order exceeds what the recurrences support."""


class ConvergenceError(QPistonError):
    """A quadrature or integration self-check did not meet its tolerance."""


class StepSizeError(ConvergenceError):
    """Norm or unitarity drift during RK integration; refine ``dtau``."""


class ChannelError(QPistonError):
    """A quantum channel produced an invalid density operator."""


class CutoffError(QPistonError):
    """Too much population sits in the highest retained Fock state.

    ``cycle`` is set when the failure happens inside an engine run.
    """

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


class UndefinedEfficiencyError(QPistonError, ZeroDivisionError):
    """Efficiency requested with zero heat input."""


class CutoffWarning(UserWarning):
    """Top Fock state carries non-negligible population."""

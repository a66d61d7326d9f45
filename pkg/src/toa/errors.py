"""Exception hierarchy shared by all computation modules."""


class ToaError(Exception):
    """Base class for every error raised by :mod:`toa`."""


class InvalidParameterError(ToaError, ValueError):
    """A constructor or function argument violates its documented range."""


class DomainError(ToaError, ValueError):
    """Inputs fall outside the validity domain of an approximation."""


class NumericalError(ToaError):
    """Base class for failures of a numerical kernel (CLI exit code 4)."""


class ResolutionError(NumericalError):
    """A quadrature rule does not resolve the oscillations of its integrand."""

    def __init__(self, message, required_points=None):
        super().__init__(message)
        self.required_points = required_points


class AliasingError(NumericalError):
    """Consecutive phase samples are too far apart to unwrap reliably."""


class BracketError(NumericalError):
    """A root-finding bracket does not contain a sign change."""


class WindowTruncationError(NumericalError):
    """A time window cuts off a non-negligible part of a density."""


class TurningPointError(DomainError):
    """A classically forbidden point was reached where the formula needs E > V."""


class IntegrationError(NumericalError):
    """A trajectory integration violated its energy-conservation bound."""


class DegenerateEnsembleError(NumericalError):
    """No member of a classical ensemble reached the arrival point."""


class QuasiClassicalWarning(UserWarning):
    """A quasi-classical result was requested outside its comfortable validity range."""

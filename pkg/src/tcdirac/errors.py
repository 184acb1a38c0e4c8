"""Exception hierarchy.

Each family maps onto one CLI exit code (see :mod:`tcdirac.cli`).
"""


class TcdiracError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(TcdiracError, ValueError):
    """Malformed scenario, unknown field kind, bad parameter count."""

    exit_code = 2


class DomainError(TcdiracError, ValueError):
    """A mathematical precondition is violated (|beta| >= 1, degenerate axis...)."""

    exit_code = 3


class UnsupportedOrderError(DomainError):
    """Requested derivative order beyond what is implemented."""


class InvalidGermError(DomainError):
    """Initial germ violates the Lagrangian or positivity conditions."""


class NumericalError(TcdiracError, ArithmeticError):
    """Integration or invariant failure."""

    exit_code = 4

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class StiffnessError(NumericalError):
    """Step size underflow inside the adaptive integrator."""


class CausticError(NumericalError):
    """det C collapsed: the complex germ lost rank."""


class UnderResolvedGridError(NumericalError):
    """Quadrature grid too coarse for the requested observable."""


class OutputError(TcdiracError, OSError):
    """Output location cannot be written."""

    exit_code = 5

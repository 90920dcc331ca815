"""Exception hierarchy."""


class DirichletHeatError(Exception):
    """Base class for all package errors."""


class StructuralError(DirichletHeatError, ValueError):
    """An eigenvalue sequence violates monotonicity or positivity."""


class DomainError(DirichletHeatError, ValueError):
    """An argument lies outside the domain of the operation."""


class IllConditionedError(DirichletHeatError, ArithmeticError):
    """The working precision cannot resolve the requested linear solve.

    ``required_bits`` carries an estimate of the precision that would be enough.
    """

    def __init__(self, message, required_bits=None):
        super().__init__(message)
        self.required_bits = required_bits


class InterpolationError(DirichletHeatError, ValueError):
    """A sample is too sparse for the requested quadrature."""


class GapConditionError(DirichletHeatError, ValueError):
    """The exponent sequence fails the gap/growth condition."""


class RegimeError(DirichletHeatError, ValueError):
    """The recovery method does not apply to the exponent regime."""


class SensorError(DirichletHeatError, ValueError):
    """A sensor point is unverified or fails verification."""


class MissingSampleError(DirichletHeatError, ValueError):
    """A sample does not contain the time stamps the method needs."""

"""Exception hierarchy shared by all modules."""


class DoiELError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameterError(DoiELError, ValueError):
    """An argument is outside its admissible range."""


class NumericDomainError(DoiELError, ArithmeticError):
    """A quantity is undefined (singular, non-finite or divergent)."""


class NoNematicBranchError(DoiELError):
    """The density is at or below the critical density rho*."""

    def __init__(self, rho, rho_star):
        self.rho = float(rho)
        self.rho_star = float(rho_star)
        super().__init__(
            f"no nematic equilibrium for rho={self.rho!r}: need rho > rho*={self.rho_star!r}"
        )


class IterationLimitError(DoiELError):
    """An iterative solver failed to converge; carries its last bracket."""

    def __init__(self, message, bracket=None):
        self.bracket = bracket
        if bracket is not None:
            message = f"{message} (bracket={tuple(float(b) for b in bracket)})"
        super().__init__(message)


class ResolutionError(DoiELError):
    """A discretization is too coarse for the requested accuracy."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class ZeroShapeParameterError(DoiELError):
    """Lambda = 0 makes c vanish; use the reduced constant c/Lambda instead."""


class SingularCoefficientError(DoiELError, ArithmeticError):
    """A coefficient that appears in a denominator is zero."""


class DegenerateMomentError(DoiELError):
    """The Q-tensor has no simple leading eigenvalue (e.g. isotropic state)."""


class PositivityError(DoiELError):
    """A reconstructed distribution takes non-positive values."""


class IntegratorError(DoiELError):
    """Time integration became unstable; carries the last good time."""

    def __init__(self, message, t_last=None):
        self.t_last = t_last
        super().__init__(message)


class AmbiguousKernelError(DoiELError):
    """Singular values show no clear gap between kernel and range."""

    def __init__(self, message, singular_values=None):
        self.singular_values = singular_values
        super().__init__(message)

"""Exception types shared across the package."""


class ThreeRegionError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ThreeRegionError, ValueError):
    """Invalid parameters, geometry or configuration file."""


class DomainError(ThreeRegionError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(ThreeRegionError, ArithmeticError):
    """A numerical procedure failed to converge.

    ``estimates`` holds the last iterates (e.g. two successive quadrature
    estimates) so the caller can judge how far off the result is.
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class TruncationError(NumericalError):
    """Fock-space truncation is too small for the requested quantity."""


class DegenerateStateError(NumericalError):
    """Density matrix with (numerically) vanishing trace."""

"""Exception types raised by the solvers and checks."""


class PlanarSpeedError(Exception):
    """Base class for all package errors."""


class ParameterError(PlanarSpeedError, ValueError):
    """A parameter lies outside its admissible domain."""


class DegenerateForcing(PlanarSpeedError):
    """The forcing attains zero, so the harmonic-mean integral diverges."""


class MonotonicityViolation(PlanarSpeedError):
    """The explicit reaction step is too large for the scheme to stay monotone."""


class CflViolation(PlanarSpeedError):
    """The explicit diffusion step exceeds its stability bound."""


class DomainTooSmall(PlanarSpeedError):
    """The truncated line is too short for the requested horizon."""


class NonStationary(PlanarSpeedError):
    """The speed fit has not settled; the horizon is too short."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ConfigError(PlanarSpeedError, ValueError):
    """An experiment configuration failed validation."""

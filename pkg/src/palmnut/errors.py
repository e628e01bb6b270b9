"""Exception types raised by palmnut."""


class PalmnutError(Exception):
    """Base class for all library errors."""


class DimensionError(PalmnutError, ValueError):
    """An array does not match the shape an operator or problem expects."""


class ConvergenceError(PalmnutError, RuntimeError):
    """An iterative estimate did not converge; ``estimate`` holds the last value."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ConstraintViolation(PalmnutError, ValueError):
    """A phase vector left the unit-modulus set."""


class NumericalError(PalmnutError, FloatingPointError):
    """A solver produced a non-finite value; ``state`` holds the offending iterate."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class FormatError(PalmnutError, ValueError):
    """A vector or trace file is malformed."""


class ConfigError(PalmnutError, ValueError):
    """An experiment configuration is invalid."""

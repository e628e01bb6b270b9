"""Magnitude/phase regularized complex image reconstruction with PALM-family solvers."""
from .errors import (
    ConfigError,
    ConstraintViolation,
    ConvergenceError,
    DimensionError,
    FormatError,
    NumericalError,
    PalmnutError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConstraintViolation",
    "ConvergenceError",
    "DimensionError",
    "FormatError",
    "NumericalError",
    "PalmnutError",
    "__version__",
]

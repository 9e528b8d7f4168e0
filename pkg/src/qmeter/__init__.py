"""Spin-dynamics and rate-equation models of molecular quantum meters."""

from .errors import HorizonWarning, NumericalError

__version__ = "0.1.0"
__all__ = ["HorizonWarning", "NumericalError", "__version__"]

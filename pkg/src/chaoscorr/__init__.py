"""Quantum-classical chaos correspondence for the kicked top and the Dicke model."""
__version__ = "0.1.0"

from .errors import ConfigError, EmptyShellError, NumericalError, PoleError

__all__ = ["__version__", "ConfigError", "EmptyShellError", "NumericalError", "PoleError"]

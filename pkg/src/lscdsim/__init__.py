"""Simulation and analysis toolkit for two-location switching CUSUM detection."""
from ._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]

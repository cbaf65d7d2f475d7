"""Individually- and strongly-secure multi-source multicast codes with exact leakage audits."""

from .field import Field
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["Field", "BACKEND", "__version__"]

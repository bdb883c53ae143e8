"""Spatially coupled LDPC protographs with sub-block locality."""
from __future__ import annotations

from ._core import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]

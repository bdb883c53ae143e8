"""Pick the kernel backend at import time.

The compiled module is used when it was built; setting
``SCLDPCL_PURE_PYTHON=1`` forces the numpy fallback. ``BACKEND`` names the
choice that was made.
"""
from __future__ import annotations

import os

from . import _fallback

if os.environ.get("SCLDPCL_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

de_iterate = _impl.de_iterate
peel = _impl.peel

__all__ = ["BACKEND", "de_iterate", "peel"]

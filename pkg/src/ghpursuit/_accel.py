"""Numba switch.

Set ``GHPURSUIT_NUMBA=0`` before import to force the pure-numpy kernels.
"""
from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and os.environ.get("GHPURSUIT_NUMBA", "1").lower() not in ("0", "false", "no", "off")


def njit(func):
    """Compile ``func`` with numba when enabled; otherwise hand it back untouched."""
    if not USE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)

"""Numba availability and the ``ROSFIT_DISABLE_NUMBA`` switch.

Set ``ROSFIT_DISABLE_NUMBA=1`` before import to force the pure-numpy
kernels even when numba is installed.
"""
import os

DISABLED = os.environ.get("ROSFIT_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - depends on environment
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(fn):
    """``numba.njit(cache=True)`` when numba is importable, otherwise identity."""
    if numba is None:
        return fn
    return numba.njit(cache=True)(fn)

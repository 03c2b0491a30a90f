"""Numba switch.

Hot kernels are written once as plain loops and compiled with ``numba.njit``
unless ``COLORSDP_DISABLE_NUMBA`` is set to a truthy value (or numba is not
importable).  Kernels whose uncompiled loops would be unusably slow carry a
separate vectorised numpy implementation; see :mod:`colorsdp.kernels`.
"""

import os

_FLAG = "COLORSDP_DISABLE_NUMBA"


def _disabled_by_env():
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    if _disabled_by_env():
        raise ImportError("numba disabled by " + _FLAG)
    from numba import njit as _njit

    USE_NUMBA = True
except ImportError:
    _njit = None
    USE_NUMBA = False


def maybe_njit(func):
    """Compile ``func`` with numba when enabled, otherwise return it unchanged."""
    if USE_NUMBA:
        return _njit(cache=True)(func)
    return func

"""Compiled-kernel switch.

Hot loops are written once in numba-compatible Python. Setting
``RRTREPLAN_NO_NUMBA=1`` in the environment (before import) runs them as
ordinary interpreted numpy code instead; results are identical, only slower.
"""
import os

_DISABLED = os.environ.get("RRTREPLAN_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

USE_NUMBA = _numba is not None and not _DISABLED


def njit(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it unchanged."""
    if USE_NUMBA:
        return _numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

"""Numba switch.

Hot kernels are written twice: a loop version compiled with numba and a
vectorised numpy version. Setting ``FATIGUE_AUTOML_NO_NUMBA=1`` (or running
without numba installed) selects the numpy path everywhere.
"""
import os

_FLAG = "FATIGUE_AUTOML_NO_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get(_FLAG, "").strip().lower() not in {
    "1",
    "true",
    "yes",
    "on",
}


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is usable, else return it."""
    if not NUMBA_AVAILABLE:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def pick(nb_fn, np_fn):
    return nb_fn if USE_NUMBA else np_fn

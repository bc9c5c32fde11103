"""Kernel backend selection.

Hot loops are written twice: a numba ``@njit`` version and a vectorised
numpy version. Setting ``FRIEDLANDER_PURE_NUMPY=1`` in the environment (or
running without numba installed) routes every dispatcher to the numpy path.
"""

import os

_FLAG = os.environ.get("FRIEDLANDER_PURE_NUMPY", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "error_model": "numpy",
    "boundscheck": False,
}


def njit(fn):
    """Compile ``fn`` with the project defaults, or return it untouched."""
    if numba is None:
        return fn
    return numba.njit(**numba_default)(fn)


def backend():
    return "numba" if USE_NUMBA else "numpy"

"""Numba availability and kernel-path selection.

The projector kernels exist twice: a numba ``@njit`` build and a pure-numpy
build.  Set ``PDMM_DISABLE_NUMBA=1`` to force the numpy path (the numpy path
is also used automatically when numba is not importable).
"""

import os

DISABLE_ENV = "PDMM_DISABLE_NUMBA"


def _numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_AVAILABLE = _numba_available()
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get(DISABLE_ENV, "") not in ("1", "true", "yes")

"""Switch between numba-compiled kernels and the plain Python/numpy path.

Both paths are always importable; ``USE_NUMBA`` only selects which one the
public wrappers in :mod:`rainbow.kernels` dispatch to. Set ``RAINBOW_JIT=0``
to force the fallback path.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("RAINBOW_JIT", "1") != "0"


def njit(fn):
    # compilation is lazy, so defining a kernel costs nothing until it is called
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)

"""Optional numba acceleration.

Set ``DHTLAB_NUMBA=0`` to force the pure-numpy kernels even when numba is
installed.  The flag is read once, at import time.
"""

import os

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("DHTLAB_NUMBA", "1") != "0"


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if _njit is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _njit(*args, **kwargs)

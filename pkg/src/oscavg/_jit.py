"""Optional numba acceleration.

Set ``OSCAVG_DISABLE_NUMBA=1`` before import to run every kernel on its
pure-numpy/pure-python path.
"""
import os

DISABLED = os.environ.get("OSCAVG_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if DISABLED:
        raise ImportError("numba disabled by OSCAVG_DISABLE_NUMBA")
    import numba

    USING_NUMBA = True

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)

except ImportError:
    USING_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

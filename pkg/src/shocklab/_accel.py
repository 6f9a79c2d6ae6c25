"""Numba switch.

``SHOCKLAB_NUMBA=0`` forces the pure-numpy kernels even when numba is
importable.  ``SHOCKLAB_THREADS`` sets the numba thread count when the CLI
flag is absent.
"""
import os
import warnings

warnings.filterwarnings("ignore", message="The TBB threading layer")

_flag = os.environ.get("SHOCKLAB_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _flag


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity otherwise (keeps kernels importable)."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def deco(fn):
        return fn

    if args and callable(args[0]):
        return args[0]
    return deco


prange = numba.prange if HAVE_NUMBA else range


def set_threads(n=None):
    if n is None:
        env = os.environ.get("SHOCKLAB_THREADS")
        n = int(env) if env else None
    if n is not None and HAVE_NUMBA:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    return n

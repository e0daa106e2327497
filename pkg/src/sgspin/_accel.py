"""Numba switch.

Set ``SGSPIN_DISABLE_NUMBA=1`` before import to force the pure-numpy kernels.
"""
import os

_FLAG = "SGSPIN_DISABLE_NUMBA"

try:
    import numba as _numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAVE_NUMBA = False


def _env_disabled():
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise an identity decorator.

    The compiled variants are always built when numba exists so that tests and
    the benchmark can compare both paths; ``USE_NUMBA`` only decides which one
    the public kernels dispatch to.
    """
    kwargs.setdefault("cache", True)
    if HAVE_NUMBA:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]
    return lambda f: f


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

"""Numba switch.

Set ``SPECDIFF_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba
is not importable the numpy kernels are used silently.
"""
import os

_FALSEY = {"", "0", "false", "no", "off"}

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

NUMBA_DISABLED = os.environ.get("SPECDIFF_DISABLE_NUMBA", "").strip().lower() not in _FALSEY
USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
}


def njit(func):
    """Compile ``func`` with the package-wide numba options."""
    import numba

    return numba.njit(**numba_default)(func)

"""Optional numba acceleration.

Set ``DOI_EL_DISABLE_NUMBA=1`` to force the pure-numpy code paths, which are
also used automatically when numba cannot be imported.
"""

import os

_FLAG = os.environ.get("DOI_EL_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is available, otherwise the identity decorator.

    The decorated function is compiled even if ``USE_NUMBA`` is false, so the
    benchmark can always compare both paths; dispatch happens in the callers.
    """
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f

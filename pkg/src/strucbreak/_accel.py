"""Backend selection for the hot numeric kernels.

Set ``STRUCBREAK_BACKEND=numpy`` to force the pure-numpy path. Any other
value (or no value) uses numba when it can be imported.
"""

from __future__ import annotations

import os

_requested = os.environ.get("STRUCBREAK_BACKEND", "numba").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _requested != "numpy"


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is present, identity otherwise.

    The decorated function is always compiled if numba is installed, even
    when the numpy backend is selected, so both paths stay testable.
    """
    kwargs.setdefault("cache", True)
    if _numba is None:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f
    return _numba.njit(*args, **kwargs)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"

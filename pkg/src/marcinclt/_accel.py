"""Numba acceleration switch.

Hot kernels in :mod:`marcinclt._kernels` are compiled with ``numba.njit`` by
default.  Setting the environment variable ``MARCINCLT_NO_NUMBA=1`` (before
import) selects the pure NumPy/Python fallback path: the same functions run
uncompiled.  Both paths consume identical pre-drawn random streams, so results
are bit-identical across modes.
"""

import os

_flag = os.environ.get("MARCINCLT_NO_NUMBA", "").strip().lower()
NUMBA_ENABLED = _flag not in {"1", "true", "yes"}

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):
        """Identity decorator standing in for numba.njit."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap

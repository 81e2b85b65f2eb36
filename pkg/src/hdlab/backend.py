"""Numeric backend selection.

Hot inner loops are compiled with numba when it is importable, unless the
environment variable ``HDLAB_NO_NUMBA`` is set to a truthy value, in which
case pure-NumPy fallbacks are used instead.  ``benchmarks/bench_backends.py``
compares the two paths.
"""

import os

_TRUTHY = {"1", "true", "yes", "on"}

NUMBA_DISABLED = os.environ.get("HDLAB_NO_NUMBA", "").strip().lower() in _TRUTHY

if not NUMBA_DISABLED:
    try:
        from numba import njit, prange  # noqa: F401

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is an install dependency
        HAS_NUMBA = False
else:
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not NUMBA_DISABLED

if not USE_NUMBA:

    def njit(*args, **kwargs):  # type: ignore[no-redef]
        """No-op decorator standing in for numba.njit."""

        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

    prange = range  # noqa: F811


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"

"""Kernel acceleration switch.

Hot numeric loops live in :mod:`hptrim._kernels` as plain numpy source and
are compiled with ``numba.njit`` when available. Setting the environment
variable ``HPTRIM_NO_NUMBA=1`` (or any non-zero value) before import keeps
the same source running as ordinary Python/numpy. Both paths are exercised
by ``benchmarks/bench_kernels.py``.
"""

import os

_flag = os.environ.get("HPTRIM_NO_NUMBA", "").strip()
_DISABLED = _flag not in ("", "0")

if not _DISABLED:
    try:
        from numba import njit as _njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USING_NUMBA = False
else:
    USING_NUMBA = False


def kernel(fn):
    """Compile ``fn`` with numba when acceleration is active, else return it."""
    if USING_NUMBA:
        return _njit(cache=True)(fn)
    return fn

"""Kernel backend selection.

Hot numeric kernels throughout the package are written once, in
numba-compatible numpy, and decorated with :func:`jit`.  The backend is
chosen at import time from the ``CAMARL_KERNELS`` environment variable:

``numba`` (default)
    kernels are compiled with ``numba.njit(cache=True)``
``numpy``
    kernels run as the same plain numpy/Python functions (slower fallback,
    useful for debugging and as the reference path for benchmarks)

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

import os
import warnings

_requested = os.environ.get("CAMARL_KERNELS", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(
        f"CAMARL_KERNELS must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested in ("", "numba"):
    try:
        from numba import njit as _njit

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        warnings.warn("numba unavailable, falling back to numpy kernels")
        BACKEND = "numpy"
else:
    BACKEND = "numpy"


def jit(fn):
    """Compile ``fn`` under the numba backend, return it unchanged otherwise."""
    if BACKEND == "numba":
        return _njit(cache=True)(fn)
    return fn

"""BLAS thread-count control.

Dense kernels on the small blocks used throughout this package are faster
and bit-reproducible with a single BLAS thread; oversubscribed thread
pools in containers make them pathologically slow.  ``set_blas_threads``
applies a limit through threadpoolctl when available and otherwise falls
back to the usual environment variables (effective only before the BLAS
is first loaded).
"""

from __future__ import annotations

import os

_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

_limiter = None


def set_blas_threads(n: int = 1) -> None:
    global _limiter
    for var in _ENV_VARS:
        os.environ.setdefault(var, str(n))
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    if _limiter is not None:
        _limiter.unregister()
    _limiter = threadpool_limits(limits=n, user_api="blas")

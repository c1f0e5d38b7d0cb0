"""Numba backend selection.

Hot kernels (Kalman recursions, CART split scans) are compiled with
``numba.njit`` by default.  Set ``CYCLETREES_NUMBA=0`` in the environment to
run the pure-NumPy fallback paths instead; both paths are exercised by
``benchmarks/bench_backends.py``.
"""

import os


def _numba_enabled() -> bool:
    flag = os.environ.get("CYCLETREES_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_enabled()

if USE_NUMBA:
    from numba import njit

    def maybe_jit(func):
        return njit(cache=True)(func)
else:
    def maybe_jit(func):
        return func

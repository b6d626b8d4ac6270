"""
Optional numba acceleration

The O(n^3) triples enumeration and the Jacobi sweeps are written as plain
loops and compiled with numba when it is importable. Without numba the same
functions run as ordinary Python, which is correct but much slower.
"""

import logging

logger = logging.getLogger(__name__)

try:
    from numba import njit
except ImportError:
    def njit(*args, **kwargs):
        # Supports both @njit and @njit(...)
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def _identity_decorator_inner(fn):
            return fn
        return _identity_decorator_inner
    logger.debug("numba not available, falling back to pure Python loops")

__all__ = ['njit']

"""Optional numba acceleration.

Kernels are written once as plain Python over numpy scalars. When numba is
importable and ``PBIT_GRNG_DISABLE_NUMBA`` is unset (or ``0``), they are
compiled with ``numba.njit``; otherwise the same functions run interpreted,
which is slow but bit-identical.
"""

import os

_DISABLE_VALUES = {"1", "true", "yes", "on"}


def _numba_requested():
    return os.environ.get("PBIT_GRNG_DISABLE_NUMBA", "").strip().lower() not in _DISABLE_VALUES


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

USE_NUMBA = _numba is not None and _numba_requested()


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        func = args[0]
        func.py_func = func
        return func

    def decorator(func):
        func.py_func = func
        return func

    return decorator


def _cached_njit(*args, **kwargs):
    # Compiled kernels are cached on disk so short CLI runs skip compilation.
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


if USE_NUMBA:
    njit = _cached_njit
else:
    njit = _noop_jit


def backend_name():
    return "numba" if USE_NUMBA else "python"

"""Kernel backend selection.

The TRANSMONSIM_BACKEND environment variable picks the implementation:
"numba" (default), "numpy" (pure-numpy fallback), or "auto" (numba when
importable, else numpy).  `get_backend(name)` fetches a specific backend
regardless of the environment, which the benchmark uses to compare both.
"""

from __future__ import annotations

import os
import warnings

from . import numpy_backend

_ENV_VAR = "TRANSMONSIM_BACKEND"
_active = None


def get_backend(name: str):
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        from . import numba_backend

        return numba_backend
    raise ValueError(f"unknown backend {name!r} (expected 'numba' or 'numpy')")


def active_backend():
    """The process-wide backend, resolved once from the environment."""
    global _active
    if _active is None:
        choice = os.environ.get(_ENV_VAR, "auto").lower()
        if choice == "numpy":
            _active = numpy_backend
        elif choice == "numba":
            _active = get_backend("numba")
        elif choice == "auto":
            try:
                _active = get_backend("numba")
            except ImportError:
                warnings.warn("numba unavailable; falling back to numpy kernels")
                _active = numpy_backend
        else:
            raise ValueError(
                f"{_ENV_VAR}={choice!r} not understood (use 'numba', 'numpy', or 'auto')"
            )
    return _active

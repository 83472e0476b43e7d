"""Kernel backend selection.

The hot numeric kernels exist twice: a numba-jitted version and a pure
numpy fallback. ``SHIFTPRUNE_BACKEND`` picks one:

* ``auto`` (default): numba if importable, else numpy
* ``numba``: require numba, fail loudly if missing
* ``numpy``: force the fallback (useful for debugging and benchmarking)
"""

from __future__ import annotations

import os

_ENV_VAR = "SHIFTPRUNE_BACKEND"


def _load(name: str):
    if name == "numpy":
        from . import _kernels_numpy as mod
    elif name == "numba":
        from . import _kernels_numba as mod
    else:
        raise ValueError(f"unknown backend {name!r} (expected auto|numba|numpy)")
    return mod


def resolve_backend(requested: str | None = None):
    """Return the kernel module for `requested` (or the env var / auto)."""
    name = requested or os.environ.get(_ENV_VAR, "auto")
    if name == "auto":
        try:
            return _load("numba")
        except ImportError:
            return _load("numpy")
    return _load(name)


kernels = resolve_backend()


def active_backend() -> str:
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return kernels.NAME

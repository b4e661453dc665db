"""Kernel backend selection.

Two interchangeable implementations of the hot inner loops live here:
``numba_impl`` (JIT-compiled) and ``numpy_impl`` (pure vectorized
numpy).  They are written to produce bit-identical float64 output, so
rendered frames do not depend on which backend is active.

The MGGEN_BACKEND environment variable picks one at import time:
``auto`` (default) prefers numba and falls back to numpy when numba is
unavailable, ``numba`` and ``numpy`` force a choice.  ``set_backend``
overrides the selection at runtime, which the benchmark uses to compare
the two.
"""

from __future__ import annotations

import logging
import os
from types import ModuleType

from . import numpy_impl

ENV_VAR = "MGGEN_BACKEND"
BACKENDS = ("numba", "numpy")

log = logging.getLogger(__name__)

_active: ModuleType | None = None


def _load_numba() -> ModuleType:
    from . import numba_impl

    return numba_impl


def _select_initial() -> ModuleType:
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"{ENV_VAR} must be auto, numba, or numpy, not {choice!r}")
    if choice == "numpy":
        return numpy_impl
    try:
        return _load_numba()
    except ImportError:
        if choice == "numba":
            raise
        log.warning("numba unavailable, falling back to the numpy backend")
        return numpy_impl


def active() -> ModuleType:
    """The currently selected kernel module."""
    global _active
    if _active is None:
        _active = _select_initial()
    return _active


def active_name() -> str:
    return active().NAME


def set_backend(name: str) -> ModuleType:
    """Force a backend by name, returning the selected module."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}, expected one of {BACKENDS}")
    _active = _load_numba() if name == "numba" else numpy_impl
    return _active


def get_backend(name: str | None = None) -> ModuleType:
    """Look up a backend module without changing the active one."""
    if name is None:
        return active()
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}, expected one of {BACKENDS}")
    return _load_numba() if name == "numba" else numpy_impl

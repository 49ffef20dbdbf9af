"""Kernel backend selection.

The hot array kernels exist twice: numba-jitted loops and a pure-numpy
fallback. The active backend is picked once at import time from the
``SARSEG_KERNELS`` environment variable:

    SARSEG_KERNELS=numba   force numba (ImportError if unavailable)
    SARSEG_KERNELS=numpy   force the pure-numpy fallback
    SARSEG_KERNELS=auto    numba if importable, else numpy (default)

``load_backend`` imports a named backend regardless of the environment, so
benchmarks and equivalence tests can compare both in one process.
"""

import importlib
import os

_ENV_VAR = "SARSEG_KERNELS"
_VALID = ("auto", "numba", "numpy")


def load_backend(name):
    """Import and return the kernel module for ``name`` ('numba' or 'numpy')."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}, expected 'numba' or 'numpy'")
    return importlib.import_module(f"{__name__}.kernels_{name}")


def _select():
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice not in _VALID:
        raise ValueError(f"{_ENV_VAR}={choice!r} invalid; expected one of {_VALID}")
    if choice in ("auto", "numba"):
        try:
            return load_backend("numba")
        except ImportError:
            if choice == "numba":
                raise
    return load_backend("numpy")


K = _select()


def backend_name():
    return K.NAME

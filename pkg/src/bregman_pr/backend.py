"""Kernel backend selection.

The hot inner loops (frame extraction, overlap-add, elementwise divergence
math) exist twice: a numba ``@njit`` version and a pure-numpy version with
identical semantics.  The active backend is chosen once at import time from
the ``BREGMAN_PR_BACKEND`` environment variable:

* ``numba``  - require the JIT kernels (ImportError if numba is missing)
* ``numpy``  - force the vectorized numpy fallback
* ``auto``   - numba when importable, numpy otherwise (default)

``set_backend()`` switches at runtime; benchmarks and the backend
equivalence tests use it directly.
"""

import os

_VALID = ("numba", "numpy")

_active_name = None
_active_module = None


def _default_name() -> str:
    requested = os.environ.get("BREGMAN_PR_BACKEND", "auto").strip().lower()
    if requested in _VALID:
        return requested
    if requested in ("", "auto"):
        try:
            import numba  # noqa: F401
            return "numba"
        except ImportError:
            return "numpy"
    raise ValueError(
        f"BREGMAN_PR_BACKEND={requested!r} not understood; "
        f"expected one of {_VALID + ('auto',)}"
    )


def _load(name: str):
    if name == "numba":
        from . import _kernels_numba as mod
    elif name == "numpy":
        from . import _kernels_numpy as mod
    else:
        raise ValueError(f"unknown backend {name!r}")
    return mod


def set_backend(name: str) -> None:
    """Select the kernel implementation ('numba' or 'numpy')."""
    global _active_name, _active_module
    _active_module = _load(name)
    _active_name = name


def active_backend() -> str:
    """Name of the backend currently in use."""
    if _active_name is None:
        set_backend(_default_name())
    return _active_name


def kernels():
    """The active kernel module (lazy-initialized)."""
    if _active_module is None:
        set_backend(_default_name())
    return _active_module

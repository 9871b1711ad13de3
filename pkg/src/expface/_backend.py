"""Kernel backend selection.

The compiled Cython kernels are preferred when importable; the numpy
kernels are the always-available fallback. Selection happens once at
import and can be forced with the environment variable
``EXPFACE_BACKEND`` set to ``auto`` (default), ``cython`` or ``python``.
"""

import os

from . import _kernels_py

_choice = os.environ.get("EXPFACE_BACKEND", "auto").strip().lower()

if _choice not in ("auto", "cython", "python"):
    raise ImportError(
        f"EXPFACE_BACKEND must be 'auto', 'cython' or 'python', got {_choice!r}"
    )

if _choice == "python":
    kernels = _kernels_py
else:
    try:
        from . import _kernels_cy as kernels  # type: ignore[no-redef]
    except ImportError:
        if _choice == "cython":
            raise ImportError(
                "EXPFACE_BACKEND=cython but the compiled kernels are not "
                "available; reinstall with a C compiler or use 'python'"
            ) from None
        kernels = _kernels_py


def active_backend():
    """Name of the kernel backend in use: 'cython' or 'python'."""
    return kernels.BACKEND_NAME

"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python
twins are the fallback.  Setting ``NFSLICER_PURE=1`` forces the pure
backend.  Both produce bit-identical results, so the choice only
affects speed.
"""

from __future__ import annotations

import os

from . import kernels_py

_COMPILED = None
if not os.environ.get("NFSLICER_PURE"):
    try:
        from . import _kernels as _COMPILED  # type: ignore[no-redef]
    except ImportError:
        _COMPILED = None

ACTIVE_BACKEND = "compiled" if _COMPILED is not None else "python"


def kernels(name: str | None = None):
    """Return the kernel module for ``name`` (default: best available)."""
    if name in (None, "auto"):
        return _COMPILED if _COMPILED is not None else kernels_py
    if name == "python":
        return kernels_py
    if name == "compiled":
        if _COMPILED is None:
            raise RuntimeError("compiled kernels are not available")
        return _COMPILED
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    if _COMPILED is not None:
        names.insert(0, "compiled")
    return names

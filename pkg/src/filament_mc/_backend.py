"""Kernel backend selection.

The compiled extension (_core, Cython) is preferred; the numpy fallback is
always available.  Override with FILAMENT_MC_BACKEND=compiled|python|auto.
With "compiled" requested but not importable, an ImportError is raised so a
silent slowdown cannot masquerade as success.
"""

import os

from . import _kernels_fallback

_requested = os.environ.get("FILAMENT_MC_BACKEND", "auto").lower()

if _requested not in ("auto", "compiled", "python"):
    raise ValueError(f"FILAMENT_MC_BACKEND must be auto|compiled|python, got {_requested!r}")

if _requested == "python":
    kernels = _kernels_fallback
else:
    try:
        from . import _core as kernels
    except ImportError:
        if _requested == "compiled":
            raise
        kernels = _kernels_fallback

BACKEND = kernels.BACKEND


def get_kernels(name=None):
    """Kernel module by name ("compiled" | "python" | None for the active one)."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_fallback
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")

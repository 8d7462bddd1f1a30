"""Pick the compiled kernels when available.

Set ``STEALTH_GRID_LAB_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _fallback

_forced = os.environ.get("STEALTH_GRID_LAB_BACKEND", "").strip().lower()

if _forced == "python":
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        if _forced == "cython":
            raise
        kernels = _fallback

BACKEND = kernels.BACKEND


def get(name=None):
    """Return a kernel module by name (``"cython"``/``"python"``), default the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")

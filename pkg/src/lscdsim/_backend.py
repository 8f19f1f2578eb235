"""Kernel backend selection.

The compiled extension is used when importable; set ``LSCDSIM_PURE_PYTHON=1``
to force the pure-Python kernels.
"""
import os

from . import _kernels_py

if os.environ.get("LSCDSIM_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on build environment
        kernels = _kernels_py

BACKEND: str = kernels.NAME

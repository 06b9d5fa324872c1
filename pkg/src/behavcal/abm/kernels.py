"""Kernel backend selection.

The compiled extension is used when importable; ``BEHAVCAL_PURE=1`` forces
the pure-Python reference kernel.
"""

from __future__ import annotations

import os

from behavcal.abm import _kernels_py

MODE_PRICE = _kernels_py.MODE_PRICE
MODE_FUNDAMENTAL = _kernels_py.MODE_FUNDAMENTAL


def _load():
    if os.environ.get("BEHAVCAL_PURE", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from behavcal.abm import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


_impl, KERNEL_BACKEND = _load()
simulate_kernel = _impl.simulate_kernel
python_kernel = _kernels_py.simulate_kernel


def compiled_kernel():
    """The compiled kernel, or ``None`` when it is not built."""
    try:
        from behavcal.abm import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels.simulate_kernel

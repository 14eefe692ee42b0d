"""Hot-kernel backend selection.

Imports the compiled extension when available, otherwise falls back to the
pure-Python reference implementations. ``GEOSEG_BACKEND=python`` forces the
fallback (useful for debugging and for the kernel benchmark).
"""

import os

from . import pyref

if os.environ.get("GEOSEG_BACKEND", "").lower() == "python":
    _impl = pyref
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = pyref

BACKEND = _impl.BACKEND
fast_march = _impl.fast_march
gauss_seidel_sweeps = _impl.gauss_seidel_sweeps
solve_tridiagonal_batched = _impl.solve_tridiagonal_batched

__all__ = [
    "BACKEND",
    "fast_march",
    "gauss_seidel_sweeps",
    "solve_tridiagonal_batched",
    "pyref",
]

"""Kernel backend selection.

The compiled extension is used when it imports; set ``MLGWEIBULL_BACKEND`` to
``python`` to force the pure-Python kernels, or to ``cython`` to make a missing
extension an import error instead of a silent fallback.
"""
import os

from . import _pyslice

_requested = os.environ.get("MLGWEIBULL_BACKEND", "").strip().lower()

try:
    from . import _cslice
except ImportError:
    if _requested == "cython":
        raise
    _cslice = None

_KERNELS = {"python": _pyslice}
if _cslice is not None:
    _KERNELS["cython"] = _cslice

if _requested == "python" or _cslice is None:
    BACKEND = "python"
else:
    BACKEND = "cython"


def available_backends():
    return sorted(_KERNELS)


def get_slice_sweep(backend=None):
    """Return the ``slice_sweep`` function of ``backend`` (default: active)."""
    name = BACKEND if backend is None else backend
    try:
        return _KERNELS[name].slice_sweep
    except KeyError:
        raise ValueError(f"backend {name!r} is not available") from None


slice_sweep = get_slice_sweep()

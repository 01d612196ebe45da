"""Hot-loop kernels with a compiled core and a pure-Python twin.

The compiled extension (``_native``, Cython) is preferred when it built;
otherwise the pure twin is used. Both implement identical arithmetic in
identical order, so results are bit-for-bit equal — simulations replay
identically regardless of which backend is active. Select explicitly with
``MASSSIM_KERNELS=native|pure`` (``auto`` is the default).
"""

import os

from . import _pure

_choice = os.environ.get("MASSSIM_KERNELS", "auto")
if _choice not in ("auto", "native", "pure"):
    raise RuntimeError(f"MASSSIM_KERNELS must be auto, native, or pure; got {_choice!r}")

_impl = None
if _choice in ("auto", "native"):
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "native":
            raise RuntimeError("MASSSIM_KERNELS=native but the compiled kernel extension is not built")
        _impl = None
if _impl is None:
    _impl = _pure

BACKEND = "pure" if _impl is _pure else "native"

step_once = _impl.step_once
interp_positions = _impl.interp_positions
distances = _impl.distances
segment_cpa = _impl.segment_cpa
forward_min_distance = _impl.forward_min_distance

__all__ = [
    "BACKEND",
    "step_once",
    "interp_positions",
    "distances",
    "segment_cpa",
    "forward_min_distance",
]

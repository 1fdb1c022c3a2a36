"""Hot loops, backed by the Cython extension when it is built.

Set ``USQ_PURE_PYTHON=1`` to force the fallback.  Both backends evaluate the
same squared-distance comparison, so results are identical.
"""
import os
from array import array

from usq import _kernels_py

try:
    if os.environ.get("USQ_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from usq import _kernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"


def _as_buffers(xs, ys):
    if _impl is _kernels_py:
        return xs, ys
    return array("d", xs), array("d", ys)


def colliding_pairs(xs, ys, two_r: float) -> list[tuple[int, int]]:
    """Index pairs (i < j) whose centers are closer than ``two_r``."""
    bx, by = _as_buffers(xs, ys)
    return _impl.colliding_pairs(bx, by, float(two_r))


def count_within(xs, ys, two_r: float) -> int:
    bx, by = _as_buffers(xs, ys)
    return _impl.count_within(bx, by, float(two_r))

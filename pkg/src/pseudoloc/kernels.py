"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
reference runs. Set ``PSEUDOLOC_PURE_PYTHON=1`` to force the fallback.
Both modules stay reachable as ``compiled`` (possibly ``None``) and
``reference`` so tests and benchmarks can compare them directly.
"""

import os

from . import _kernels_py as reference

try:
    from . import _kernels as compiled
except ImportError:
    compiled = None

if compiled is not None and os.environ.get("PSEUDOLOC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    _impl = compiled
    BACKEND = "cython"
else:
    _impl = reference
    BACKEND = "python"

farthest_point_sample = _impl.farthest_point_sample
ball_query = _impl.ball_query
box_filter_valid = _impl.box_filter_valid

__all__ = ["BACKEND", "compiled", "reference", "farthest_point_sample", "ball_query", "box_filter_valid"]

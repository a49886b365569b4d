"""Raster kernels: compiled extension when available, numpy fallback otherwise.

SLEDGE_NO_EXT=1 forces the fallback (used by the benchmark and the
equivalence tests). ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

from . import fallback

if os.environ.get("SLEDGE_NO_EXT") == "1":
    _impl = fallback
    BACKEND = "fallback"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = fallback
        BACKEND = "fallback"

blend_select = _impl.blend_select
dilate_binary = _impl.dilate_binary
iou_counts = _impl.iou_counts
source_over = _impl.source_over

"""Image-layer pipeline: bbox masks, IoU candidate selection, dilation, blending.

The mask selects the region one step may change; everything outside it is
carried over from the previous canvas byte-for-byte. Masks are strictly
binary and always sized to the canvas they will blend.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .canvas import BBox, Canvas
from .errors import DimensionMismatchError, EmptyRegionError, ValidationError

DEFAULT_SELECT_THRESHOLD = 0.25
DEFAULT_DILATION_RADIUS = 5
DILATION_REFERENCE_SIZE = 1024


class Mask:
    """Binary single-channel raster matching its target canvas dimensions."""

    __slots__ = ("width", "height", "_values")

    def __init__(self, values: np.ndarray):
        arr = np.asarray(values)
        if arr.ndim != 2:
            raise ValidationError(f"mask must be 2-d, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            arr = arr.astype(np.uint8)
        if not np.isin(arr, (0, 1)).all():
            raise ValidationError("mask values must be strictly 0 or 1")
        if arr.flags.writeable or not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "_values", arr)
        object.__setattr__(self, "height", arr.shape[0])
        object.__setattr__(self, "width", arr.shape[1])

    def __setattr__(self, name, value):
        raise AttributeError("Mask is immutable")

    @property
    def values(self) -> np.ndarray:
        """Read-only (h, w) uint8 array of 0/1."""
        return self._values

    def popcount(self) -> int:
        return int(np.count_nonzero(self._values))

    def is_empty(self) -> bool:
        return self.popcount() == 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return self._values.shape == other._values.shape and np.array_equal(
            self._values, other._values
        )

    def __hash__(self):
        return hash((self.width, self.height, self._values.tobytes()[:64]))

    def __repr__(self):
        return f"Mask({self.width}x{self.height}, popcount={self.popcount()})"


@dataclass(frozen=True)
class MaskCandidate:
    """A refiner proposal with its IoU score against the bbox mask."""

    mask: Mask
    score: float


def _require_same_dims(a, b, what: str) -> None:
    if a.width != b.width or a.height != b.height:
        raise DimensionMismatchError(
            f"{what}: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def bbox_mask(bboxes: Sequence[BBox], width: int, height: int) -> Mask:
    """Union mask: 1 exactly where a pixel lies inside any of the bboxes."""
    boxes = list(bboxes)
    if not boxes:
        raise EmptyRegionError("a step's image mask needs at least one bbox")
    values = np.zeros((height, width), dtype=np.uint8)
    for i, box in enumerate(boxes):
        box.validate_within(width, height, what=f"bbox[{i}]")
        values[box.y0 : box.y1, box.x0 : box.x1] = 1
    return Mask(values)


def iou(a: Mask, b: Mask) -> float:
    """|a AND b| / |a OR b|; two empty masks score 1 (vacuous agreement)."""
    _require_same_dims(a, b, "iou mask dimensions differ")
    inter, union = _kernels.iou_counts(a.values, b.values)
    if union == 0:
        return 1.0
    return inter / union


def score_candidates(reference: Mask, masks: Iterable[Mask]) -> list[MaskCandidate]:
    """Score each proposed mask by IoU against the reference bbox mask."""
    return [MaskCandidate(mask=m, score=iou(reference, m)) for m in masks]


def select_candidate(
    reference: Mask,
    candidates: Sequence[MaskCandidate],
    threshold: float = DEFAULT_SELECT_THRESHOLD,
) -> Mask:
    """Best-scoring candidate at or above threshold, else the bbox mask itself.

    Ties resolve to the lowest candidate index, so selection is deterministic
    for any candidate ordering the refiner produces.
    """
    best: MaskCandidate | None = None
    for cand in candidates:
        _require_same_dims(reference, cand.mask, "candidate mask dimensions differ")
        if best is None or cand.score > best.score:
            best = cand
    if best is None or best.score < threshold:
        return reference
    return best.mask


def dilate(mask: Mask, radius: int) -> Mask:
    """Morphological dilation with a square element of side 2*radius+1."""
    if radius < 0:
        raise ValidationError(f"dilation radius must be >= 0, got {radius}")
    if radius == 0:
        return mask
    return Mask(_kernels.dilate_binary(mask.values, radius))


def default_dilation_radius(width: int, height: int) -> int:
    """Default radius, proportional to canvas size (5 px at 1024x1024)."""
    scaled = DEFAULT_DILATION_RADIUS * (width + height) / (2 * DILATION_REFERENCE_SIZE)
    return int(scaled + 0.5)


def blend(base: Canvas, edited: Canvas, mask: Mask) -> Canvas:
    """Per-pixel selection: base where mask is 0, edited where mask is 1."""
    _require_same_dims(base, edited, "blend canvas dimensions differ")
    _require_same_dims(base, mask, "blend mask dimensions differ")
    return Canvas(_kernels.blend_select(base.array, edited.array, mask.values))


def composite_over(dst: Canvas, src: Canvas) -> Canvas:
    """Source-over alpha compositing of src onto dst (straight alpha)."""
    _require_same_dims(dst, src, "composite canvas dimensions differ")
    return Canvas(_kernels.source_over(dst.array, src.array))


def paint_region(base: Canvas, patch: np.ndarray, bbox: BBox) -> Canvas:
    """Source-over paint of a bbox-sized RGBA patch, clipped at canvas bounds."""
    if patch.shape[0] != bbox.height or patch.shape[1] != bbox.width:
        raise DimensionMismatchError(
            f"patch shape {patch.shape[:2]} does not match bbox {bbox.as_list()}"
        )
    clip = bbox.clipped(base.width, base.height)
    if clip is None:
        return base
    out = base.mutable_copy()
    sub_dst = out[clip.y0 : clip.y1, clip.x0 : clip.x1]
    sub_src = patch[
        clip.y0 - bbox.y0 : clip.y1 - bbox.y0, clip.x0 - bbox.x0 : clip.x1 - bbox.x0
    ]
    out[clip.y0 : clip.y1, clip.x0 : clip.x1] = _kernels.source_over(
        np.ascontiguousarray(sub_dst), np.ascontiguousarray(sub_src)
    )
    return Canvas(out)


def restrict_to_mask(canvas: Canvas, mask: Mask) -> Canvas:
    """Copy of canvas made fully transparent outside the mask."""
    _require_same_dims(canvas, mask, "restrict canvas/mask dimensions differ")
    out = canvas.mutable_copy()
    out[mask.values == 0] = 0
    return Canvas(out)


def nearest_neighbor_scale(src: np.ndarray, out_height: int, out_width: int) -> np.ndarray:
    """Nearest-neighbor rescale of an (h, w, c) array (floor index mapping)."""
    h, w = src.shape[:2]
    rows = (np.arange(out_height) * h) // out_height
    cols = (np.arange(out_width) * w) // out_width
    return src[rows][:, cols]

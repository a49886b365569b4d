"""Mask refiners: propose tighter change masks than the raw bbox union.

A refiner looks at the canvas before and after an edit and suggests
candidate masks for the changed region. The engine scores candidates by IoU
against the bbox-union mask and falls back to that mask when nothing scores
above threshold, so refiners can always fail safe by returning no candidates.
"""

from __future__ import annotations

import base64
import logging

import numpy as np
from scipy import ndimage

from ..canvas import Canvas, encode_mask_png, encode_png
from ..compositor import Mask
from ..errors import DimensionMismatchError

log = logging.getLogger(__name__)

DEFAULT_DIFF_THRESHOLD = 8

# 8-connectivity: diagonal neighbors join a component
_STRUCTURE = np.ones((3, 3), dtype=np.uint8)


class NullRefiner:
    """Always defers to the bbox-union mask."""

    def refine(self, base: Canvas, edited: Canvas, reference: Mask) -> tuple[Mask, ...]:
        return ()


class ConnectedComponentRefiner:
    """Candidates are the connected components of the changed-pixel set.

    A pixel counts as changed when any channel differs by more than
    ``diff_threshold``. Only components that intersect the reference region
    are proposed, in label order (row-major first-pixel order, so
    deterministic); when several survive, their union is appended as a final
    candidate.
    """

    def __init__(self, diff_threshold: int = DEFAULT_DIFF_THRESHOLD):
        if not isinstance(diff_threshold, int) or diff_threshold < 0:
            raise ValueError("diff_threshold must be a non-negative integer")
        self.diff_threshold = diff_threshold

    def refine(self, base: Canvas, edited: Canvas, reference: Mask) -> tuple[Mask, ...]:
        if base.width != edited.width or base.height != edited.height:
            raise DimensionMismatchError(
                f"refine: {base.width}x{base.height} vs {edited.width}x{edited.height}"
            )
        diff = np.abs(
            base.array.astype(np.int16) - edited.array.astype(np.int16)
        ).max(axis=2)
        changed = (diff > self.diff_threshold).astype(np.uint8)
        if not changed.any():
            return ()
        labels, count = ndimage.label(changed, structure=_STRUCTURE)
        ref = reference.values
        kept = []
        for i in range(1, count + 1):
            component = (labels == i).astype(np.uint8)
            if np.logical_and(component, ref).any():
                kept.append(component)
        if not kept:
            return ()
        candidates = [Mask(c) for c in kept]
        if len(kept) > 1:
            union = np.zeros_like(changed)
            for c in kept:
                union |= c
            candidates.append(Mask(union))
        return tuple(candidates)


class RemoteRefiner:
    """Asks an HTTP service for masks; degrades to no candidates on failure.

    POSTs multipart ``canvas`` (edited canvas PNG) and ``mask`` (reference
    mask PNG) to ``{url}/v1/refine`` and expects
    ``{"masks": ["<base64 png>", ...]}`` back. Any transport, protocol, or
    decode failure logs a warning and yields (), which the engine resolves to
    the bbox-union fallback.
    """

    def __init__(self, url: str, timeout: float = 30.0, client=None):
        import httpx

        self.url = url.rstrip("/")
        self.timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)

    def refine(self, base: Canvas, edited: Canvas, reference: Mask) -> tuple[Mask, ...]:
        from ..canvas import decode_mask_png

        try:
            response = self._client.post(
                f"{self.url}/v1/refine",
                files={
                    "canvas": ("canvas.png", encode_png(edited.array), "image/png"),
                    "mask": ("mask.png", encode_mask_png(reference.values), "image/png"),
                },
            )
            response.raise_for_status()
            body = response.json()
            encoded = body["masks"]
            masks = []
            for item in encoded:
                values = decode_mask_png(base64.b64decode(item))
                if values.shape != (base.height, base.width):
                    raise ValueError("mask dimensions do not match the canvas")
                masks.append(Mask(values))
            return tuple(masks)
        except Exception as exc:
            log.warning("remote refiner failed, falling back to bbox mask: %s", exc)
            return ()

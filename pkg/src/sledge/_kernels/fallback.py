"""Pure-numpy implementations of the per-pixel raster kernels.

The compiled extension (``_core``) implements the same four operations with
identical integer arithmetic; either backend must produce bit-identical
output (covered by tests/test_kernels.py). All masks are (h, w) uint8 arrays
holding strictly 0/1; rasters are (h, w, 4) uint8 RGBA.
"""

from __future__ import annotations

import numpy as np


def blend_select(base: np.ndarray, edited: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-pixel selection: edited where mask is 1, base where mask is 0."""
    sel = mask.astype(bool)[:, :, None]
    return np.where(sel, edited, base).astype(np.uint8)


def dilate_binary(values: np.ndarray, radius: int) -> np.ndarray:
    """Morphological dilation with a square element of side 2*radius+1."""
    if radius == 0:
        return values.copy()
    h, w = values.shape
    # Separable: horizontal OR-run then vertical OR-run, zero padding.
    padded = np.zeros((h, w + 2 * radius), dtype=np.uint8)
    padded[:, radius : radius + w] = values
    horiz = np.zeros((h, w), dtype=np.uint8)
    for dx in range(2 * radius + 1):
        np.bitwise_or(horiz, padded[:, dx : dx + w], out=horiz)
    padded_v = np.zeros((h + 2 * radius, w), dtype=np.uint8)
    padded_v[radius : radius + h, :] = horiz
    out = np.zeros((h, w), dtype=np.uint8)
    for dy in range(2 * radius + 1):
        np.bitwise_or(out, padded_v[dy : dy + h, :], out=out)
    return out


def iou_counts(a: np.ndarray, b: np.ndarray) -> tuple[int, int]:
    """(intersection popcount, union popcount) of two binary masks."""
    inter = int(np.count_nonzero(np.logical_and(a, b)))
    union = int(np.count_nonzero(np.logical_or(a, b)))
    return inter, union


def source_over(dst: np.ndarray, src: np.ndarray) -> np.ndarray:
    """Source-over alpha compositing of straight-alpha RGBA8 rasters.

    Fixed integer arithmetic (round-half-up divisions) so the compiled
    kernel can reproduce it exactly:

        t    = 255 - sa
        oa   = sa + round(da*t / 255)
        den  = sa*255 + da*t
        outc = round((src_c*sa*255 + dst_c*da*t) / den)   (0 when den == 0)
    """
    d = dst.astype(np.int64)
    s = src.astype(np.int64)
    sa = s[:, :, 3]
    da = d[:, :, 3]
    da_t = da * (255 - sa)
    oa = sa + (da_t + 127) // 255
    den = sa * 255 + da_t
    num = s[:, :, :3] * (sa * 255)[:, :, None] + d[:, :, :3] * da_t[:, :, None]
    safe = np.where(den == 0, 1, den)
    rgb = (num + (safe // 2)[:, :, None]) // safe[:, :, None]
    rgb = np.where((den == 0)[:, :, None], 0, rgb)
    out = np.empty(dst.shape, dtype=np.uint8)
    out[:, :, :3] = rgb
    out[:, :, 3] = oa
    return out

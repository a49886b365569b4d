"""Deterministic procedural generator for offline runs and tests.

The mock reads simple cues from the instruction text and fabricates a
plausible reply without any model call:

- each double-quoted substring becomes a text element,
- "background" adds a full-canvas gradient image,
- photo / image / picture / illustration words add a textured image region,
- a supplied asset is nearest-neighbor scaled into an image region,
- placement follows directional hints (top-left, bottom, center, ...),
- with no cues at all, the instruction itself becomes a text element.

All randomness comes from sha256(seed, instruction), so a given request
yields byte-identical replies on every call, across platforms.
"""

from __future__ import annotations

import hashlib
import random
import re

import numpy as np

from ..canvas import RGBA, BBox, encode_png
from ..compositor import nearest_neighbor_scale, paint_region
from ..metadata import GeneratorReply, image_element, text_element
from .base import GeneratorRequest

PALETTE: tuple[RGBA, ...] = (
    (31, 41, 51, 255),
    (217, 4, 41, 255),
    (0, 95, 115, 255),
    (238, 155, 0, 255),
    (10, 36, 99, 255),
    (82, 183, 136, 255),
    (255, 209, 102, 255),
    (255, 255, 255, 255),
)

FAMILIES = ("sans", "sans-bold", "serif", "serif-bold", "script", "mono")

# corner hints first so "top-right" is not read as "top"
_HINTS = (
    ("top-left", r"\btop[\s-]?left\b"),
    ("top-right", r"\btop[\s-]?right\b"),
    ("bottom-left", r"\bbottom[\s-]?left\b"),
    ("bottom-right", r"\bbottom[\s-]?right\b"),
    ("top", r"\btop\b"),
    ("bottom", r"\bbottom\b"),
    ("left", r"\bleft\b"),
    ("right", r"\bright\b"),
    ("center", r"\bcent(?:er|re)\b"),
)

_IMAGE_WORDS = re.compile(r"\b(photo|image|picture|illustration)\b")


def _find_hint(text: str) -> str | None:
    lower = text.lower()
    for name, pattern in _HINTS:
        if re.search(pattern, lower):
            return name
    return None


def _place(hint: str | None, w: int, h: int, rw: int, rh: int, rng: random.Random) -> BBox:
    """Fit an rw x rh box into the canvas region named by the hint."""
    rw = max(1, min(rw, w))
    rh = max(1, min(rh, h))
    m = max(0, min(min(w, h) // 20, (w - rw) // 2, (h - rh) // 2))
    cx = (w - rw) // 2
    cy = (h - rh) // 2
    positions = {
        "top-left": (m, m),
        "top-right": (w - rw - m, m),
        "bottom-left": (m, h - rh - m),
        "bottom-right": (w - rw - m, h - rh - m),
        "top": (cx, m),
        "bottom": (cx, h - rh - m),
        "left": (m, cy),
        "right": (w - rw - m, cy),
        "center": (cx, cy),
    }
    if hint is None:
        jx = rng.randrange(-w // 16, w // 16 + 1) if w >= 16 else 0
        jy = rng.randrange(-h // 16, h // 16 + 1) if h >= 16 else 0
        x0 = min(max(0, cx + jx), w - rw)
        y0 = min(max(0, cy + jy), h - rh)
    else:
        x0, y0 = positions[hint]
    return BBox(x0, y0, x0 + rw, y0 + rh)


def _gradient(width: int, height: int, c0: RGBA, c1: RGBA, vertical: bool) -> np.ndarray:
    axis = np.arange(height if vertical else width, dtype=np.int64)
    span = max(1, (height if vertical else width) - 1)
    out = np.empty((height, width, 4), dtype=np.uint8)
    for ch in range(4):
        ramp = c0[ch] + ((c1[ch] - c0[ch]) * axis) // span
        if vertical:
            out[:, :, ch] = ramp[:, None]
        else:
            out[:, :, ch] = ramp[None, :]
    return out


def _texture(width: int, height: int, c0: RGBA, c1: RGBA, kind: int) -> np.ndarray:
    ys, xs = np.mgrid[0:height, 0:width]
    cell = max(4, min(width, height) // 8)
    if kind == 0:
        pattern = ((xs // cell) + (ys // cell)) % 2
    elif kind == 1:
        pattern = ((xs + ys) // cell) % 2
    else:
        pattern = ((xs * xs + ys * ys) // (cell * cell)) % 2
    out = np.empty((height, width, 4), dtype=np.uint8)
    for ch in range(4):
        out[:, :, ch] = np.where(pattern == 0, c0[ch], c1[ch]).astype(np.uint8)
    return out


def _printable(text: str) -> str:
    kept = "".join(ch for ch in text if ch == "\n" or ord(ch) >= 32)
    return kept.strip() or "untitled"


class MockGenerator:
    """Offline generator with fully reproducible output."""

    def generate(self, request: GeneratorRequest) -> GeneratorReply:
        request.validate()
        instruction = request.instruction
        w, h = request.canvas.width, request.canvas.height
        digest = hashlib.sha256(
            f"{request.seed}\n{instruction}".encode("utf-8")
        ).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        hint = _find_hint(instruction)
        lower = instruction.lower()

        image_elements = []
        patches: list[tuple[BBox, np.ndarray]] = []

        if "background" in lower:
            bbox = BBox(0, 0, w, h)
            c0, c1 = rng.sample(PALETTE, 2)
            patches.append((bbox, _gradient(w, h, c0, c1, vertical=rng.random() < 0.5)))
            image_elements.append(image_element(bbox, caption="background"))

        if request.asset is not None:
            rw, rh = max(1, w * 2 // 5), max(1, h * 3 // 10)
            bbox = _place(hint, w, h, rw, rh, rng)
            scaled = nearest_neighbor_scale(
                request.asset.array, bbox.height, bbox.width
            )
            patches.append((bbox, scaled))
            image_elements.append(image_element(bbox, caption="asset"))
        elif _IMAGE_WORDS.search(lower):
            rw, rh = max(1, w * 2 // 5), max(1, h * 3 // 10)
            bbox = _place(hint, w, h, rw, rh, rng)
            c0, c1 = rng.sample(PALETTE, 2)
            patches.append(
                (bbox, _texture(bbox.width, bbox.height, c0, c1, rng.randrange(3)))
            )
            image_elements.append(image_element(bbox))

        text_elements = []
        quoted = [q for q in re.findall(r'"([^"]+)"', instruction) if q.strip()]
        if not quoted and not image_elements:
            quoted = [_printable(instruction)]
        if quoted:
            font_size = max(12, h // 18 + rng.randrange(-2, 3))
            rw = max(font_size * 2, w * 3 // 5)
            gap = font_size // 2
            box_h = font_size * 2
            total_h = len(quoted) * box_h + (len(quoted) - 1) * gap
            region = _place(hint, w, h, rw, min(total_h, h), rng)
            color = rng.choice(PALETTE[:-1])
            family = rng.choice(FAMILIES)
            y = region.y0
            for line in quoted:
                est = (len(line) * font_size * 5) // 8 + font_size
                bw = max(font_size, min(est, w))
                x0 = min(max(0, region.x0 + (region.width - bw) // 2), w - bw)
                y0 = min(y, h - box_h)
                text_elements.append(
                    text_element(
                        BBox(x0, y0, x0 + bw, y0 + box_h),
                        content=line,
                        font_family=family,
                        font_size=font_size,
                        color=color,
                    )
                )
                y += box_h + gap

        payload = None
        if patches:
            edited = request.canvas
            for bbox, patch in patches:
                edited = paint_region(edited, patch, bbox)
            payload = encode_png(edited.array)

        return GeneratorReply(
            elements=tuple(image_elements) + tuple(text_elements),
            image_payload=payload,
        ).validate()

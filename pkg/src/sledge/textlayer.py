"""Deterministic text rendering from element metadata.

Glyphs are rasterized with FreeType via Pillow using pinned settings (basic
layout engine, grayscale antialiasing) so identical inputs always produce
byte-identical pixels. Rendering is local: only pixels inside the element
bbox (clipped to the canvas) can change.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .canvas import BBox, Canvas
from .compositor import paint_region
from .errors import ValidationError
from .metadata import KIND_TEXT, MIN_FONT_SIZE, ElementMetadata

logger = logging.getLogger(__name__)

FONTS_DIR_ENV = "SLEDGE_FONTS_DIR"
LINE_ADVANCE_FACTOR = 1.2
SHRINK_FACTOR = 0.9

_PACKAGED_FONTS = Path(__file__).parent / "fonts"


@lru_cache(maxsize=64)
def _load_font(path: str, size: int) -> ImageFont.FreeTypeFont:
    # Basic layout engine: raqm-driven shaping varies with system libraries,
    # the basic engine does not.
    return ImageFont.truetype(path, size=size, layout_engine=ImageFont.Layout.BASIC)


class FontRegistry:
    """Immutable map from family token to font file, with a guaranteed fallback."""

    def __init__(self, families: dict[str, Path], fallback_family: str):
        if fallback_family not in families:
            raise ValidationError(
                f"fallback family {fallback_family!r} missing from registry"
            )
        self._families = {k: Path(v) for k, v in families.items()}
        self.fallback_family = fallback_family
        for token, path in self._families.items():
            if not path.is_file():
                raise ValidationError(f"font file for {token!r} not found: {path}")

    @classmethod
    def default(cls) -> "FontRegistry":
        """Packaged fonts, or the directory named by SLEDGE_FONTS_DIR."""
        root = Path(os.environ.get(FONTS_DIR_ENV, _PACKAGED_FONTS))
        manifest = root / "fonts.json"
        if not manifest.is_file():
            raise ValidationError(f"fonts manifest not found: {manifest}")
        spec = json.loads(manifest.read_text("utf-8"))
        families = {tok: root / rel for tok, rel in spec["families"].items()}
        return cls(families, spec["fallback"])

    @property
    def families(self) -> tuple[str, ...]:
        return tuple(self._families)

    def resolve(self, token: str) -> tuple[Path, bool]:
        """Font path for a family token; unknown tokens map to the fallback.

        Returns (path, fallback_used). Resolution never fails: legibility
        beats strictness for unknown tokens.
        """
        if token in self._families:
            return self._families[token], False
        logger.warning("unknown font family %r, using fallback %r", token, self.fallback_family)
        return self._families[self.fallback_family], True


@dataclass(frozen=True)
class LineLayout:
    """One laid-out line: text plus bbox-local left edge and baseline."""

    text: str
    x: int
    baseline: int


@dataclass(frozen=True)
class TextLayout:
    lines: tuple[LineLayout, ...]
    font_size: int
    clipped: bool


def _wrap_paragraph(words: list[str], max_width: int, font: ImageFont.FreeTypeFont) -> list[str]:
    lines: list[str] = []
    current = ""
    for word in words:
        candidate = word if not current else current + " " + word
        if current and font.getlength(candidate) > max_width:
            lines.append(current)
            current = word
        else:
            current = candidate
    if current:
        lines.append(current)
    return lines


def layout_lines(content: str, bbox: BBox, font_path: Path | str, font_size: int) -> TextLayout:
    """Greedy word-wrap, centered both ways, shrink-to-fit on vertical overflow.

    Explicit newlines force breaks. If the line block exceeds the bbox height,
    the size drops in 10% steps down to the 4 px minimum, after which the
    block is centered anyway and clipping happens at raster time.
    """
    if font_size < MIN_FONT_SIZE:
        raise ValidationError(f"font_size must be >= {MIN_FONT_SIZE}, got {font_size}")
    path = str(font_path)
    size = font_size
    while True:
        font = _load_font(path, size)
        lines: list[str] = []
        for paragraph in content.split("\n"):
            words = paragraph.split()
            if not words:
                lines.append("")
                continue
            lines.extend(_wrap_paragraph(words, bbox.width, font))
        advance = int(LINE_ADVANCE_FACTOR * size + 0.5)
        block_height = advance * len(lines)
        if block_height <= bbox.height or size <= MIN_FONT_SIZE:
            break
        size = max(MIN_FONT_SIZE, int(size * SHRINK_FACTOR))

    ascent, _descent = font.getmetrics()
    y_offset = (bbox.height - block_height) // 2
    laid = tuple(
        LineLayout(
            text=line,
            x=(bbox.width - int(font.getlength(line) + 0.5)) // 2,
            baseline=y_offset + i * advance + ascent,
        )
        for i, line in enumerate(lines)
    )
    return TextLayout(lines=laid, font_size=size, clipped=block_height > bbox.height)


def render_text(
    canvas: Canvas,
    element: ElementMetadata,
    registry: FontRegistry,
    warnings: list[str] | None = None,
) -> Canvas:
    """Render a text element onto the canvas, source-over, clipped to its bbox."""
    element.validate()
    if element.kind != KIND_TEXT:
        raise ValidationError("render_text requires a text element")
    path, fallback_used = registry.resolve(element.font_family)
    if fallback_used and warnings is not None:
        warnings.append(
            f"font family {element.font_family!r} unknown, fell back to "
            f"{registry.fallback_family!r}"
        )
    bbox = element.bbox
    layout = layout_lines(element.content, bbox, path, element.font_size)
    font = _load_font(str(path), layout.font_size)
    ascent, _ = font.getmetrics()

    layer = Image.new("RGBA", (bbox.width, bbox.height), (0, 0, 0, 0))
    draw = ImageDraw.Draw(layer)
    for line in layout.lines:
        if not line.text:
            continue
        draw.text((line.x, line.baseline - ascent), line.text, font=font, fill=element.color)
    patch = np.asarray(layer, dtype=np.uint8)
    return paint_region(canvas, patch, bbox)

"""Immutable RGBA canvas snapshots, pixel bboxes, and color helpers.

A Canvas is a width x height RGBA8 raster (row-major, origin top-left,
y-down). Snapshots are never mutated: every edit produces a new Canvas, and
the backing array is marked read-only so accidental in-place writes fail
loudly.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import InvalidDimensionError, ValidationError

RGBA = tuple[int, int, int, int]

OPAQUE_WHITE: RGBA = (255, 255, 255, 255)
TRANSPARENT: RGBA = (0, 0, 0, 0)


def parse_hex_color(text: str) -> RGBA:
    """Parse "#RRGGBBAA" (or "#RRGGBB", alpha 255) into an RGBA tuple.

    Only uppercase hex digits are accepted; the canonical wire format is
    strict so that backend drift surfaces as an error instead of silently
    round-tripping into a different byte form.
    """
    if not isinstance(text, str) or not text.startswith("#"):
        raise ValidationError(f"color must be '#RRGGBBAA' hex, got {text!r}")
    digits = text[1:]
    if len(digits) not in (6, 8) or any(c not in "0123456789ABCDEF" for c in digits):
        raise ValidationError(f"color must be uppercase '#RRGGBBAA' hex, got {text!r}")
    r, g, b = int(digits[0:2], 16), int(digits[2:4], 16), int(digits[4:6], 16)
    a = int(digits[6:8], 16) if len(digits) == 8 else 255
    return (r, g, b, a)


def format_hex_color(color: RGBA) -> str:
    """Format an RGBA tuple as canonical uppercase "#RRGGBBAA"."""
    validate_color(color)
    return "#" + "".join(f"{c:02X}" for c in color)


def validate_color(color: object) -> RGBA:
    if (
        not isinstance(color, tuple)
        or len(color) != 4
        or any(not isinstance(c, int) or c < 0 or c > 255 for c in color)
    ):
        raise ValidationError(f"color must be a 4-tuple of 0..255 ints, got {color!r}")
    return color


@dataclass(frozen=True, order=True)
class BBox:
    """Half-open integer pixel rectangle: [x0, x1) x [y0, y1).

    Ordering constraints (x0 < x1, y0 < y1) are enforced at construction;
    canvas-bounds checks are contextual (see ``validate_within``) because
    post-hoc text edits may legally move a bbox partially off-canvas, with
    glyphs clipped at render time.
    """

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValidationError(f"bbox {name} must be an integer, got {v!r}")
        if self.x0 >= self.x1 or self.y0 >= self.y1:
            raise ValidationError(
                f"bbox must satisfy x0 < x1 and y0 < y1, got {self.as_list()}"
            )

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_list(self) -> list[int]:
        return [self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def from_list(cls, values: object) -> "BBox":
        if not isinstance(values, (list, tuple)) or len(values) != 4:
            raise ValidationError(f"bbox must be a 4-integer array, got {values!r}")
        return cls(*values)

    def is_within(self, width: int, height: int) -> bool:
        return 0 <= self.x0 and 0 <= self.y0 and self.x1 <= width and self.y1 <= height

    def validate_within(self, width: int, height: int, *, what: str = "bbox") -> None:
        if not self.is_within(width, height):
            raise ValidationError(
                f"{what} {self.as_list()} exceeds canvas bounds {width}x{height}"
            )

    def clipped(self, width: int, height: int) -> "BBox | None":
        """Intersection with the canvas rectangle, or None if empty."""
        x0, y0 = max(self.x0, 0), max(self.y0, 0)
        x1, y1 = min(self.x1, width), min(self.y1, height)
        if x0 >= x1 or y0 >= y1:
            return None
        return BBox(x0, y0, x1, y1)

    def intersection_area(self, other: "BBox") -> int:
        w = min(self.x1, other.x1) - max(self.x0, other.x0)
        h = min(self.y1, other.y1) - max(self.y0, other.y0)
        return w * h if w > 0 and h > 0 else 0


class Canvas:
    """Immutable RGBA8 raster snapshot."""

    __slots__ = ("width", "height", "_pixels")

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 4 or arr.dtype != np.uint8:
            raise ValidationError(
                f"canvas pixels must be (h, w, 4) uint8, got shape {arr.shape} dtype {arr.dtype}"
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidDimensionError("canvas dimensions must be positive")
        if arr.flags.writeable or not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "_pixels", arr)
        object.__setattr__(self, "height", arr.shape[0])
        object.__setattr__(self, "width", arr.shape[1])

    def __setattr__(self, name, value):
        raise AttributeError("Canvas is immutable")

    @property
    def array(self) -> np.ndarray:
        """Read-only (h, w, 4) uint8 view."""
        return self._pixels

    def mutable_copy(self) -> np.ndarray:
        return self._pixels.copy()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Canvas):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self._pixels, other._pixels)
        )

    def __hash__(self):
        return hash((self.width, self.height, self._pixels.tobytes()[:64]))

    def __repr__(self):
        return f"Canvas({self.width}x{self.height})"

    def to_bytes(self) -> bytes:
        return self._pixels.tobytes()

    def to_png_bytes(self) -> bytes:
        return encode_png(self._pixels)

    @classmethod
    def from_png_bytes(cls, data: bytes) -> "Canvas":
        return cls(decode_png_rgba(data))


def new_canvas(width: int, height: int, background: RGBA = OPAQUE_WHITE) -> Canvas:
    """Create a canvas with every pixel equal to ``background``."""
    if not isinstance(width, int) or not isinstance(height, int) or width <= 0 or height <= 0:
        raise InvalidDimensionError(
            f"canvas dimensions must be positive integers, got {width}x{height}"
        )
    validate_color(background)
    arr = np.empty((height, width, 4), dtype=np.uint8)
    arr[:, :] = np.array(background, dtype=np.uint8)
    return Canvas(arr)


def encode_png(array: np.ndarray) -> bytes:
    """Encode an (h, w, 4) uint8 array as PNG.

    Single shared code path for every raster the engine writes, so identical
    pixel data always yields identical bytes (CLI and service renders must be
    byte-comparable).
    """
    img = Image.fromarray(np.asarray(array, dtype=np.uint8), mode="RGBA")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_png_rgba(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    img = img.convert("RGBA")
    return np.asarray(img, dtype=np.uint8)


def encode_mask_png(values: np.ndarray) -> bytes:
    """Encode a binary (h, w) {0,1} array as 8-bit grayscale PNG with {0,255}."""
    arr = (np.asarray(values, dtype=np.uint8) * 255).astype(np.uint8)
    img = Image.fromarray(arr, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_mask_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data)).convert("L")
    arr = np.asarray(img, dtype=np.uint8)
    bad = np.logical_and(arr != 0, arr != 255)
    if bad.any():
        raise ValidationError("mask PNG must contain only values 0 and 255")
    return (arr == 255).astype(np.uint8)

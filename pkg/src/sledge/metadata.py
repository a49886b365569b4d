"""Wire format for generator replies: element metadata plus an optional payload.

The textual segment is a strict JSON object ``{"elements": [...]}``; an
optional opaque byte payload follows, framed by the literal sentinels
``<img>`` and ``</img>``. The closing sentinel is anchored to the end of the
stream, so payload bytes are delivered verbatim even when they contain
JSON-lookalike text or the sentinel strings themselves. This grammar is also
the element schema of ``document.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .canvas import RGBA, BBox, format_hex_color, parse_hex_color
from .errors import ParseError, SemanticError, SentinelError, ValidationError

KIND_TEXT = "text"
KIND_IMAGE = "image"

MIN_FONT_SIZE = 4

SENTINEL_OPEN = b"<img>"
SENTINEL_CLOSE = b"</img>"

_TEXT_KEYS = {"kind", "bbox", "content", "font_family", "font_size", "color"}
_IMAGE_KEYS = {"kind", "bbox", "caption"}


@dataclass(frozen=True)
class ElementMetadata:
    """One layer's record: a text element or an image element."""

    kind: str
    bbox: BBox
    content: str | None = None
    font_family: str | None = None
    font_size: int | None = None
    color: RGBA | None = None
    caption: str | None = None

    def validate(self) -> "ElementMetadata":
        if self.kind == KIND_TEXT:
            if self.content is None or self.font_family is None or self.font_size is None or self.color is None:
                raise ValidationError(
                    "text element requires content, font_family, font_size, and color"
                )
            if self.caption is not None:
                raise ValidationError("text element must not carry a caption")
            _validate_content(self.content)
            if not isinstance(self.font_size, int) or isinstance(self.font_size, bool):
                raise ValidationError(f"font_size must be an integer, got {self.font_size!r}")
            if self.font_size < MIN_FONT_SIZE:
                raise ValidationError(
                    f"font_size must be >= {MIN_FONT_SIZE}, got {self.font_size}"
                )
            if not isinstance(self.font_family, str) or not self.font_family:
                raise ValidationError("font_family must be a non-empty string")
            from .canvas import validate_color

            validate_color(self.color)
        elif self.kind == KIND_IMAGE:
            if any(v is not None for v in (self.content, self.font_family, self.font_size, self.color)):
                raise ValidationError("image element must not carry text attributes")
            if self.caption is not None and not isinstance(self.caption, str):
                raise ValidationError("caption must be a string")
        else:
            raise ValidationError(f"unknown element kind {self.kind!r}")
        return self

    def is_text(self) -> bool:
        return self.kind == KIND_TEXT

    def is_image(self) -> bool:
        return self.kind == KIND_IMAGE

    def patched(self, **changes) -> "ElementMetadata":
        return replace(self, **changes).validate()


def text_element(
    bbox: BBox, content: str, font_family: str, font_size: int, color: RGBA
) -> ElementMetadata:
    return ElementMetadata(
        kind=KIND_TEXT,
        bbox=bbox,
        content=content,
        font_family=font_family,
        font_size=font_size,
        color=color,
    ).validate()


def image_element(bbox: BBox, caption: str | None = None) -> ElementMetadata:
    return ElementMetadata(kind=KIND_IMAGE, bbox=bbox, caption=caption).validate()


@dataclass(frozen=True)
class GeneratorReply:
    """Parsed reply: element list plus optional opaque payload bytes.

    The payload (raster or embedding bytes) is the backend's to interpret;
    this module only frames it. An empty element list is legal only when a
    payload is present.
    """

    elements: tuple[ElementMetadata, ...]
    image_payload: bytes | None = None

    def validate(self) -> "GeneratorReply":
        for el in self.elements:
            el.validate()
        if not self.elements and self.image_payload is None:
            raise ValidationError("reply must carry elements or an image payload")
        return self


def _validate_content(content: str) -> None:
    if not isinstance(content, str) or not content:
        raise ValidationError("text content must be a non-empty string")
    for ch in content:
        if (ord(ch) < 32 and ch != "\n") or ord(ch) == 127:
            raise ValidationError(
                f"text content contains control character {ch!r} (only newline allowed)"
            )


def _scan_json_object(raw: bytes) -> int:
    """Return the end offset of the leading top-level JSON object.

    Byte-level brace matching with string/escape awareness; UTF-8
    continuation bytes are >= 0x80 and can never alias the structural ASCII
    characters, so scanning bytes is safe. Needed because both element
    content and the payload may contain sentinel-lookalike text.
    """
    i = 0
    n = len(raw)
    while i < n and raw[i] in b" \t\r\n":
        i += 1
    if i >= n or raw[i : i + 1] != b"{":
        raise ParseError("reply must start with a JSON object", offset=i)
    depth = 0
    in_string = False
    escaped = False
    while i < n:
        b = raw[i]
        if in_string:
            if escaped:
                escaped = False
            elif b == 0x5C:  # backslash
                escaped = True
            elif b == 0x22:  # double quote
                in_string = False
        else:
            if b == 0x22:
                in_string = True
            elif b == 0x7B:  # {
                depth += 1
            elif b == 0x7D:  # }
                depth -= 1
                if depth == 0:
                    return i + 1
        i += 1
    raise ParseError("unterminated JSON object", offset=n)


def _parse_bbox(value: object, index: int) -> BBox:
    if (
        not isinstance(value, list)
        or len(value) != 4
        or any(not isinstance(v, int) or isinstance(v, bool) for v in value)
    ):
        raise SemanticError(
            f"element {index}: bbox must be a 4-integer array, got {value!r}",
            element_index=index,
        )
    x0, y0, x1, y1 = value
    if x0 >= x1 or y0 >= y1:
        raise SemanticError(
            f"element {index}: bbox must satisfy x0 < x1 and y0 < y1, got {value}",
            element_index=index,
        )
    return BBox(x0, y0, x1, y1)


def _parse_element(obj: object, index: int) -> ElementMetadata:
    if not isinstance(obj, dict):
        raise SemanticError(f"element {index} must be an object", element_index=index)
    kind = obj.get("kind")
    if kind == KIND_TEXT:
        allowed = _TEXT_KEYS
    elif kind == KIND_IMAGE:
        allowed = _IMAGE_KEYS
    else:
        raise SemanticError(
            f"element {index}: kind must be 'text' or 'image', got {kind!r}",
            element_index=index,
        )
    unknown = set(obj) - allowed
    if unknown:
        raise SemanticError(
            f"element {index}: unknown keys {sorted(unknown)}", element_index=index
        )
    bbox = _parse_bbox(obj.get("bbox"), index)
    try:
        if kind == KIND_TEXT:
            missing = _TEXT_KEYS - set(obj)
            if missing:
                raise ValidationError(f"missing keys {sorted(missing)}")
            color = obj["color"]
            if not isinstance(color, str) or len(color) != 9:
                raise ValidationError(f"color must be '#RRGGBBAA', got {color!r}")
            return text_element(
                bbox=bbox,
                content=obj["content"],
                font_family=obj["font_family"],
                font_size=obj["font_size"],
                color=parse_hex_color(color),
            )
        return image_element(bbox=bbox, caption=obj.get("caption"))
    except ValidationError as exc:
        raise SemanticError(f"element {index}: {exc}", element_index=index) from exc


def parse_reply(raw: bytes) -> GeneratorReply:
    """Parse a reply byte stream into elements plus optional payload."""
    if not isinstance(raw, (bytes, bytearray)):
        raise ParseError(f"reply must be bytes, got {type(raw).__name__}")
    raw = bytes(raw)
    end = _scan_json_object(raw)
    try:
        doc = json.loads(raw[:end].decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"reply JSON is not valid UTF-8: {exc}", offset=exc.start) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", offset=exc.pos) from exc

    if set(doc) != {"elements"}:
        raise ParseError(
            f"reply object must have exactly the 'elements' key, got {sorted(doc)}"
        )
    if not isinstance(doc["elements"], list):
        raise ParseError("'elements' must be an array")
    elements = tuple(_parse_element(obj, i) for i, obj in enumerate(doc["elements"]))

    remainder = raw[end:]
    payload: bytes | None = None
    if remainder:
        if not remainder.startswith(SENTINEL_OPEN):
            raise SentinelError(
                "unexpected bytes after JSON segment (expected '<img>' sentinel)",
                offset=end,
            )
        if len(remainder) < len(SENTINEL_OPEN) + len(SENTINEL_CLOSE) or not remainder.endswith(
            SENTINEL_CLOSE
        ):
            raise SentinelError("unbalanced image sentinels", offset=end)
        payload = remainder[len(SENTINEL_OPEN) : -len(SENTINEL_CLOSE)]

    reply = GeneratorReply(elements=elements, image_payload=payload)
    try:
        return reply.validate()
    except ValidationError as exc:
        raise SemanticError(str(exc)) from exc


def _element_to_obj(el: ElementMetadata) -> dict:
    """Canonical JSON object for one element (fixed key order)."""
    el.validate()
    if el.kind == KIND_TEXT:
        return {
            "kind": KIND_TEXT,
            "bbox": el.bbox.as_list(),
            "content": el.content,
            "font_family": el.font_family,
            "font_size": el.font_size,
            "color": format_hex_color(el.color),
        }
    obj = {"kind": KIND_IMAGE, "bbox": el.bbox.as_list()}
    if el.caption is not None:
        obj["caption"] = el.caption
    return obj


def _element_from_obj(obj: object, index: int) -> ElementMetadata:
    return _parse_element(obj, index)


def serialize_reply(reply: GeneratorReply) -> bytes:
    """Canonical byte form: compact JSON, then the sentinel-framed payload."""
    reply.validate()
    doc = {"elements": [_element_to_obj(el) for el in reply.elements]}
    out = json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    if reply.image_payload is not None:
        out += SENTINEL_OPEN + reply.image_payload + SENTINEL_CLOSE
    return out

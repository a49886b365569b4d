"""Layered design documents and editing sessions with undo/redo.

A document is an ordered list of step records over a fixed-size canvas.
Rendering is a pure function of the document: replaying steps 0..k always
reproduces the same pixels, so canvas states are never stored, only derived.
History is append-only with a cursor; undo moves the cursor, never deletes,
and pushing after an undo truncates the redo tail (standard editor
semantics).
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, replace

from .canvas import RGBA, BBox, Canvas, OPAQUE_WHITE, new_canvas
from .compositor import Mask, blend
from .errors import (
    CorruptDocumentError,
    RangeError,
    ValidationError,
    WrongKindError,
)
from .metadata import KIND_TEXT, ElementMetadata
from .textlayer import FontRegistry

_default_registry: FontRegistry | None = None


def default_font_registry() -> FontRegistry:
    global _default_registry
    if _default_registry is None:
        _default_registry = FontRegistry.default()
    return _default_registry


@dataclass(frozen=True)
class StepRecord:
    """One atomic layered update: metadata plus its raster layer and mask."""

    index: int
    instruction: str
    elements: tuple[ElementMetadata, ...]
    asset_ref: str | None = None
    image_layer: Canvas | None = None
    mask: Mask | None = None

    def validate(self, canvas_width: int, canvas_height: int) -> "StepRecord":
        if not self.elements:
            raise ValidationError("a step must add at least one element")
        offenders = [
            (i, el.bbox.as_list())
            for i, el in enumerate(self.elements)
            if not el.bbox.is_within(canvas_width, canvas_height)
        ]
        if offenders:
            raise ValidationError(
                "element bbox exceeds canvas bounds: "
                + ", ".join(f"element {i} bbox {b}" for i, b in offenders),
                details={"elements": offenders},
            )
        for el in self.elements:
            el.validate()
        has_image = any(el.is_image() for el in self.elements)
        if has_image != (self.image_layer is not None):
            raise ValidationError(
                "image_layer must be present exactly when the step has image elements"
            )
        if (self.image_layer is None) != (self.mask is None):
            raise ValidationError("image_layer and mask must be present together")
        if self.image_layer is not None:
            if (
                self.image_layer.width != canvas_width
                or self.image_layer.height != canvas_height
                or self.mask.width != canvas_width
                or self.mask.height != canvas_height
            ):
                raise CorruptDocumentError(
                    f"step {self.index}: layer/mask dimensions do not match canvas"
                )
        return self


@dataclass(frozen=True)
class DesignDocument:
    """Fixed-resolution layered document: background plus ordered steps."""

    canvas_width: int
    canvas_height: int
    background: RGBA = OPAQUE_WHITE
    steps: tuple[StepRecord, ...] = ()
    theme: str | None = None

    def validate(self) -> "DesignDocument":
        for i, step in enumerate(self.steps):
            if step.index != i:
                raise CorruptDocumentError(
                    f"step indices must be contiguous from 0, step {i} has index {step.index}"
                )
            step.validate(self.canvas_width, self.canvas_height)
        return self


def flatten(
    document: DesignDocument,
    upto: int | None = None,
    registry: FontRegistry | None = None,
    warnings: list[str] | None = None,
) -> Canvas:
    """Render the canvas state after the first ``upto`` steps.

    Starts from the background fill; each step blends its image layer through
    its mask, then renders its text elements in element order. Deterministic:
    the same document yields byte-identical rasters on every call.
    """
    if upto is None:
        upto = len(document.steps)
    if not isinstance(upto, int) or upto < 0 or upto > len(document.steps):
        raise RangeError(
            f"upto must be in [0, {len(document.steps)}], got {upto}"
        )
    if registry is None:
        registry = default_font_registry()
    from .textlayer import render_text

    canvas = new_canvas(document.canvas_width, document.canvas_height, document.background)
    for step in document.steps[:upto]:
        if step.image_layer is not None:
            if (
                step.image_layer.width != canvas.width
                or step.image_layer.height != canvas.height
                or step.mask.width != canvas.width
                or step.mask.height != canvas.height
            ):
                raise CorruptDocumentError(
                    f"step {step.index}: layer/mask dimensions do not match canvas"
                )
            canvas = blend(canvas, step.image_layer, step.mask)
        for el in step.elements:
            if el.is_text():
                canvas = render_text(canvas, el, registry, warnings)
    return canvas


@dataclass(frozen=True)
class Session:
    """A document plus a cursor; the observable canvas is flatten(doc, cursor)."""

    id: str
    document: DesignDocument
    cursor: int = 0

    def validate(self) -> "Session":
        if not (0 <= self.cursor <= len(self.document.steps)):
            raise CorruptDocumentError(
                f"cursor {self.cursor} out of range for {len(self.document.steps)} steps"
            )
        return self

    @property
    def can_undo(self) -> bool:
        return self.cursor > 0

    @property
    def can_redo(self) -> bool:
        return self.cursor < len(self.document.steps)

    def observable_canvas(self, registry: FontRegistry | None = None) -> Canvas:
        return flatten(self.document, self.cursor, registry)


def new_session(
    width: int,
    height: int,
    background: RGBA = OPAQUE_WHITE,
    theme: str | None = None,
    session_id: str | None = None,
) -> Session:
    doc = DesignDocument(
        canvas_width=width, canvas_height=height, background=background, theme=theme
    )
    # new_canvas validates dimensions and background eagerly
    new_canvas(width, height, background)
    return Session(id=session_id or uuid.uuid4().hex, document=doc)


def push_step(session: Session, record: StepRecord) -> Session:
    """Append a step at the cursor, discarding any redo tail."""
    doc = session.document
    kept = doc.steps[: session.cursor]
    record = replace(record, index=len(kept))
    record.validate(doc.canvas_width, doc.canvas_height)
    new_doc = replace(doc, steps=kept + (record,))
    return Session(id=session.id, document=new_doc, cursor=session.cursor + 1)


def undo(session: Session) -> tuple[Session, bool]:
    """Move the cursor back one step; (session, False) at the boundary."""
    if not session.can_undo:
        return session, False
    return Session(id=session.id, document=session.document, cursor=session.cursor - 1), True


def redo(session: Session) -> tuple[Session, bool]:
    """Move the cursor forward one step; (session, False) at the boundary."""
    if not session.can_redo:
        return session, False
    return Session(id=session.id, document=session.document, cursor=session.cursor + 1), True


@dataclass(frozen=True)
class TextPatch:
    """Partial update for a text element; None fields are left untouched."""

    content: str | None = None
    font_family: str | None = None
    font_size: int | None = None
    color: RGBA | None = None
    bbox: BBox | None = None

    def changes(self) -> dict:
        out = {}
        for name in ("content", "font_family", "font_size", "color", "bbox"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out


def edit_text_attributes(
    session: Session, step_index: int, element_index: int, patch: TextPatch
) -> Session:
    """Replace a text element's metadata; later flattens re-render from it.

    Image layers are untouched. A patched bbox may extend partially past the
    canvas edge; glyphs are clipped at render time.
    """
    doc = session.document
    if not (0 <= step_index < len(doc.steps)):
        raise RangeError(f"step index {step_index} out of range")
    step = doc.steps[step_index]
    if not (0 <= element_index < len(step.elements)):
        raise RangeError(f"element index {element_index} out of range")
    element = step.elements[element_index]
    if element.kind != KIND_TEXT:
        raise WrongKindError(
            f"step {step_index} element {element_index} has kind "
            f"{element.kind!r}, expected {KIND_TEXT!r}"
        )
    changes = patch.changes()
    if not changes:
        raise ValidationError("patch must change at least one attribute")
    patched = element.patched(**changes)
    elements = (
        step.elements[:element_index] + (patched,) + step.elements[element_index + 1 :]
    )
    new_step = replace(step, elements=elements)
    steps = doc.steps[:step_index] + (new_step,) + doc.steps[step_index + 1 :]
    return Session(
        id=session.id, document=replace(doc, steps=steps), cursor=session.cursor
    )

"""One design step end-to-end: generate, mask, refine, dilate, blend, push.

The engine is pure orchestration over immutable values: it never mutates the
session it is given, so a failed step trivially leaves the caller's state
untouched. The preservation guarantee holds pixel-exactly by construction:
the image layer can only change pixels inside the final (dilated) mask, and
text rendering can only change pixels inside text bboxes.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

from .backends import GeneratorRequest, MockGenerator, NullRefiner
from .canvas import Canvas, decode_png_rgba, encode_png
from .compositor import (
    DEFAULT_SELECT_THRESHOLD,
    Mask,
    bbox_mask,
    blend,
    default_dilation_radius,
    dilate,
    restrict_to_mask,
    score_candidates,
)
from .document import Session, StepRecord, push_step
from .errors import ProtocolError, ValidationError
from .metadata import GeneratorReply
from .textlayer import FontRegistry, render_text

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepOutcome:
    """What one successful step produced; warnings list fallbacks taken."""

    record: StepRecord
    canvas_after: Canvas
    warnings: tuple[str, ...]


class Engine:
    """Applies instructions to sessions through a generator and a refiner."""

    def __init__(
        self,
        generator=None,
        refiner=None,
        font_registry: FontRegistry | None = None,
        select_threshold: float = DEFAULT_SELECT_THRESHOLD,
    ):
        self.generator = generator if generator is not None else MockGenerator()
        self.refiner = refiner if refiner is not None else NullRefiner()
        self.font_registry = font_registry or FontRegistry.default()
        self.select_threshold = select_threshold

    def apply_step(
        self,
        session: Session,
        instruction: str,
        *,
        asset: Canvas | None = None,
        seed: int = 0,
        dilation_radius: int | None = None,
        refine: bool = True,
    ) -> tuple[Session, StepOutcome]:
        """Run one instruction; returns the advanced session and its outcome.

        Raises without side effects on any backend or validation failure: the
        input session is immutable and is the caller's rollback point.
        """
        if not isinstance(instruction, str) or not instruction.strip():
            raise ValidationError("instruction must be non-empty")
        doc = session.document
        warnings: list[str] = []
        canvas_before = session.observable_canvas(self.font_registry)

        reply = self.generator.generate(
            GeneratorRequest(
                instruction=instruction, canvas=canvas_before, seed=seed, asset=asset
            )
        )
        reply.validate()
        if not reply.elements:
            raise ProtocolError("generator reply contains no elements")

        image_layer, final_mask = self._build_image_layer(
            canvas_before, reply, dilation_radius, refine, warnings
        )

        asset_ref = None
        if asset is not None:
            asset_ref = "sha256:" + hashlib.sha256(encode_png(asset.array)).hexdigest()

        record = StepRecord(
            index=session.cursor,
            instruction=instruction,
            elements=reply.elements,
            asset_ref=asset_ref,
            image_layer=image_layer,
            mask=final_mask,
        )
        new_session = push_step(session, record)
        record = new_session.document.steps[new_session.cursor - 1]

        canvas_after = canvas_before
        if image_layer is not None:
            canvas_after = blend(canvas_after, image_layer, final_mask)
        for el in record.elements:
            if el.is_text():
                canvas_after = render_text(
                    canvas_after, el, self.font_registry, warnings
                )
        return new_session, StepOutcome(
            record=record, canvas_after=canvas_after, warnings=tuple(warnings)
        )

    def insert_asset_step(
        self,
        session: Session,
        instruction: str,
        asset: Canvas,
        *,
        seed: int = 0,
        dilation_radius: int | None = None,
        refine: bool = True,
    ) -> tuple[Session, StepOutcome]:
        """apply_step with a mandatory image to place."""
        if asset is None:
            raise ValidationError("insert_asset_step requires an asset")
        return self.apply_step(
            session,
            instruction,
            asset=asset,
            seed=seed,
            dilation_radius=dilation_radius,
            refine=refine,
        )

    def _build_image_layer(
        self,
        canvas_before: Canvas,
        reply: GeneratorReply,
        dilation_radius: int | None,
        refine: bool,
        warnings: list[str],
    ) -> tuple[Canvas | None, Mask | None]:
        image_bboxes = [el.bbox for el in reply.elements if el.is_image()]
        if not image_bboxes:
            if reply.image_payload is not None:
                warnings.append("reply carries a payload but no image elements; ignored")
            return None, None
        if reply.image_payload is None:
            raise ProtocolError("reply has image elements but no image payload")
        try:
            edited_arr = decode_png_rgba(reply.image_payload)
        except Exception as exc:
            raise ProtocolError(f"image payload is not decodable PNG: {exc}") from exc
        if edited_arr.shape[:2] != (canvas_before.height, canvas_before.width):
            raise ProtocolError(
                f"edited canvas is {edited_arr.shape[1]}x{edited_arr.shape[0]}, "
                f"expected {canvas_before.width}x{canvas_before.height}"
            )
        edited = Canvas(edited_arr)

        for i, bbox in enumerate(image_bboxes):
            if not bbox.is_within(canvas_before.width, canvas_before.height):
                raise ValidationError(
                    f"image element {i} bbox {bbox.as_list()} exceeds canvas bounds"
                )
        reference = bbox_mask(image_bboxes, canvas_before.width, canvas_before.height)

        selected = reference
        if refine:
            candidates = self.refiner.refine(canvas_before, edited, reference)
            if candidates:
                scored = score_candidates(reference, candidates)
                # max() keeps the first of equal scores: lowest candidate index
                best = max(scored, key=lambda c: c.score)
                if best.score < self.select_threshold:
                    warnings.append(
                        f"best refiner candidate IoU {best.score:.3f} below "
                        f"threshold {self.select_threshold}; using bbox mask"
                    )
                else:
                    selected = best.mask
            elif not isinstance(self.refiner, NullRefiner):
                warnings.append("refiner produced no candidates; using bbox mask")

        if dilation_radius is None:
            dilation_radius = default_dilation_radius(
                canvas_before.width, canvas_before.height
            )
        final_mask = dilate(selected, dilation_radius)
        return restrict_to_mask(edited, final_mask), final_mask

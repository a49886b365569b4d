"""On-disk persistence for design documents: the ``.sledge`` bundle format.

A bundle is a directory ``<name>.sledge/`` holding a canonical
``document.json`` plus one PNG layer and one PNG mask per image step:

    <name>.sledge/
      document.json
      layers/step_<i>.png     RGBA, canvas-sized, transparent outside the mask
      masks/step_<i>.png      grayscale, pixels are exactly 0 or 255
      session.json            optional sidecar: editing cursor

``document.json`` is written in one canonical form (fixed key order, 2-space
indent, LF endings, trailing newline, uppercase #RRGGBBAA colors) so that
save -> load -> save is byte-identical. Writers build the whole bundle in a
temp directory and swap it into place, so readers never observe a partially
written bundle.
"""

from __future__ import annotations

import json
import os
import shutil
import uuid
from pathlib import Path

from .canvas import (
    Canvas,
    decode_mask_png,
    decode_png_rgba,
    encode_mask_png,
    encode_png,
    format_hex_color,
    parse_hex_color,
)
from .compositor import Mask
from .document import DesignDocument, Session, StepRecord
from .errors import CorruptDocumentError, ValidationError
from .metadata import _element_from_obj, _element_to_obj

BUNDLE_SUFFIX = ".sledge"
DOCUMENT_FILE = "document.json"
SESSION_FILE = "session.json"
LAYERS_DIR = "layers"
MASKS_DIR = "masks"

_DOC_KEYS = ("canvas_width", "canvas_height", "background", "theme", "steps")
_STEP_KEYS = ("index", "instruction", "asset_ref", "elements")


def _canonical_json(obj) -> bytes:
    return (json.dumps(obj, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def document_to_obj(document: DesignDocument) -> dict:
    """Plain-data form of a document, in canonical key order."""
    steps = []
    for step in document.steps:
        steps.append(
            {
                "index": step.index,
                "instruction": step.instruction,
                "asset_ref": step.asset_ref,
                "elements": [_element_to_obj(el) for el in step.elements],
            }
        )
    return {
        "canvas_width": document.canvas_width,
        "canvas_height": document.canvas_height,
        "background": format_hex_color(document.background),
        "theme": document.theme,
        "steps": steps,
    }


def document_json_bytes(document: DesignDocument) -> bytes:
    return _canonical_json(document_to_obj(document))


def _require_keys(obj: dict, keys: tuple[str, ...], where: str) -> None:
    missing = [k for k in keys if k not in obj]
    extra = [k for k in obj if k not in keys]
    if missing or extra:
        raise CorruptDocumentError(
            f"{where}: missing keys {missing}, unexpected keys {extra}"
        )


def bundle_path(path: str | os.PathLike) -> Path:
    p = Path(path)
    if p.suffix != BUNDLE_SUFFIX:
        raise ValidationError(
            f"bundle path must end with {BUNDLE_SUFFIX!r}, got {str(p)!r}"
        )
    return p


def save_document(path: str | os.PathLike, document: DesignDocument) -> Path:
    """Write a bundle atomically; replaces any existing bundle at the path."""
    target = bundle_path(path)
    document.validate()
    tmp = target.with_name(f"{target.name}.tmp-{uuid.uuid4().hex[:8]}")
    tmp.mkdir(parents=True)
    try:
        (tmp / DOCUMENT_FILE).write_bytes(document_json_bytes(document))
        layers = tmp / LAYERS_DIR
        masks = tmp / MASKS_DIR
        layers.mkdir()
        masks.mkdir()
        for step in document.steps:
            if step.image_layer is not None:
                name = f"step_{step.index}.png"
                (layers / name).write_bytes(encode_png(step.image_layer.array))
                (masks / name).write_bytes(encode_mask_png(step.mask.values))
        _swap_into_place(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return target


def _swap_into_place(tmp: Path, target: Path) -> None:
    if target.exists():
        old = target.with_name(f"{target.name}.old-{uuid.uuid4().hex[:8]}")
        os.rename(target, old)
        os.rename(tmp, target)
        shutil.rmtree(old, ignore_errors=True)
    else:
        os.rename(tmp, target)


def load_document(path: str | os.PathLike) -> DesignDocument:
    target = bundle_path(path)
    doc_file = target / DOCUMENT_FILE
    if not doc_file.is_file():
        raise CorruptDocumentError(f"bundle has no {DOCUMENT_FILE}: {target}")
    try:
        obj = json.loads(doc_file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptDocumentError(f"{DOCUMENT_FILE} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise CorruptDocumentError(f"{DOCUMENT_FILE} must hold a JSON object")
    _require_keys(obj, _DOC_KEYS, DOCUMENT_FILE)
    width, height = obj["canvas_width"], obj["canvas_height"]
    if not isinstance(width, int) or not isinstance(height, int):
        raise CorruptDocumentError("canvas dimensions must be integers")
    if not isinstance(obj["background"], str):
        raise CorruptDocumentError("background must be a color string")
    background = parse_hex_color(obj["background"])
    theme = obj["theme"]
    if theme is not None and not isinstance(theme, str):
        raise CorruptDocumentError("theme must be a string or null")
    if not isinstance(obj["steps"], list):
        raise CorruptDocumentError("steps must be a list")

    steps = []
    for i, step_obj in enumerate(obj["steps"]):
        if not isinstance(step_obj, dict):
            raise CorruptDocumentError(f"step {i} must be an object")
        _require_keys(step_obj, _STEP_KEYS, f"step {i}")
        if step_obj["index"] != i:
            raise CorruptDocumentError(
                f"step {i} records index {step_obj['index']}"
            )
        instruction = step_obj["instruction"]
        if not isinstance(instruction, str):
            raise CorruptDocumentError(f"step {i} instruction must be a string")
        asset_ref = step_obj["asset_ref"]
        if asset_ref is not None and not isinstance(asset_ref, str):
            raise CorruptDocumentError(f"step {i} asset_ref must be a string or null")
        if not isinstance(step_obj["elements"], list):
            raise CorruptDocumentError(f"step {i} elements must be a list")
        try:
            elements = tuple(
                _element_from_obj(e, j) for j, e in enumerate(step_obj["elements"])
            )
        except (ValidationError, KeyError, TypeError) as exc:
            raise CorruptDocumentError(f"step {i} has a bad element: {exc}") from exc

        image_layer = None
        mask = None
        if any(el.is_image() for el in elements):
            name = f"step_{i}.png"
            layer_file = target / LAYERS_DIR / name
            mask_file = target / MASKS_DIR / name
            if not layer_file.is_file() or not mask_file.is_file():
                raise CorruptDocumentError(
                    f"step {i} has image elements but no stored layer/mask pair"
                )
            image_layer = Canvas(decode_png_rgba(layer_file.read_bytes()))
            mask = Mask(decode_mask_png(mask_file.read_bytes()))
        steps.append(
            StepRecord(
                index=i,
                instruction=instruction,
                elements=elements,
                asset_ref=asset_ref,
                image_layer=image_layer,
                mask=mask,
            )
        )

    document = DesignDocument(
        canvas_width=width,
        canvas_height=height,
        background=background,
        steps=tuple(steps),
        theme=theme,
    )
    return document.validate()


def save_session(path: str | os.PathLike, session: Session) -> Path:
    """Save the session's document plus a cursor sidecar."""
    target = save_document(path, session.document)
    sidecar = _canonical_json({"id": session.id, "cursor": session.cursor})
    tmp = target / f"{SESSION_FILE}.tmp-{uuid.uuid4().hex[:8]}"
    tmp.write_bytes(sidecar)
    os.replace(tmp, target / SESSION_FILE)
    return target


def load_session(path: str | os.PathLike) -> Session:
    """Load a bundle as a session; without a sidecar the cursor is at the end."""
    target = bundle_path(path)
    document = load_document(target)
    session_id = target.name[: -len(BUNDLE_SUFFIX)]
    cursor = len(document.steps)
    sidecar = target / SESSION_FILE
    if sidecar.is_file():
        try:
            obj = json.loads(sidecar.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CorruptDocumentError(f"{SESSION_FILE} is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict) or not isinstance(obj.get("cursor"), int):
            raise CorruptDocumentError(f"{SESSION_FILE} must hold an integer cursor")
        cursor = obj["cursor"]
        if isinstance(obj.get("id"), str) and obj["id"]:
            session_id = obj["id"]
    return Session(id=session_id, document=document, cursor=cursor).validate()

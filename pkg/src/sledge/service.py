"""HTTP service: sessions, steps, undo/redo, rendering, post-hoc edits.

Thin delegation onto the engine and document operations. Mutating endpoints
take the session's write lock and persist the new state before replying, so
anything acknowledged with 2xx survives a restart; a backend failure maps to
5xx with the session untouched (the engine is pure, so atomicity is free).
Reads run lock-free against the last committed state.
"""

from __future__ import annotations

import logging
import os
import threading
from collections import OrderedDict
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .bundle import BUNDLE_SUFFIX, document_to_obj, load_session, save_session
from .canvas import (
    BBox,
    Canvas,
    OPAQUE_WHITE,
    decode_png_rgba,
    encode_png,
    format_hex_color,
    parse_hex_color,
)
from .document import (
    Session,
    TextPatch,
    edit_text_attributes,
    flatten,
    new_session,
    redo,
    undo,
)
from .engine import Engine
from .errors import (
    BackendError,
    CorruptDocumentError,
    ProtocolError,
    RangeError,
    SledgeError,
    ValidationError,
)
from .metadata import _element_to_obj

log = logging.getLogger(__name__)

STORE_DIR_ENV = "SLEDGE_STORE_DIR"
PORT_ENV = "SLEDGE_PORT"
CORS_ENV = "SLEDGE_CORS_ORIGINS"
DEFAULT_PORT = 8787
DEFAULT_STORE_DIR = "~/.local/state/sledge"
DEFAULT_LRU_CAPACITY = 64


class SessionStore:
    """Persistent session map with per-session write locks and LRU memory.

    Every commit writes the bundle to disk before the caller replies, so the
    in-memory map is purely a cache; evicted or forgotten sessions reload
    from their bundles on demand.
    """

    def __init__(self, root: str | Path, capacity: int = DEFAULT_LRU_CAPACITY):
        self.root = Path(root).expanduser()
        self.root.mkdir(parents=True, exist_ok=True)
        self.capacity = capacity
        self._sessions: OrderedDict[str, Session] = OrderedDict()
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def bundle_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}{BUNDLE_SUFFIX}"

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def get(self, session_id: str) -> Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
            if session is not None:
                self._sessions.move_to_end(session_id)
                return session
        path = self.bundle_path(session_id)
        if not path.is_dir():
            raise KeyError(session_id)
        session = load_session(path)
        session = Session(id=session_id, document=session.document, cursor=session.cursor)
        self._cache(session)
        return session

    def commit(self, session: Session) -> None:
        """Persist then cache; the disk copy is the source of truth."""
        save_session(self.bundle_path(session.id), session)
        self._cache(session)

    def _cache(self, session: Session) -> None:
        with self._registry_lock:
            self._sessions[session.id] = session
            self._sessions.move_to_end(session.id)
            while len(self._sessions) > self.capacity:
                self._sessions.popitem(last=False)


def _error_body(code: str, message: str, details=None) -> dict:
    body = {"error": {"code": code, "message": message}}
    if details:
        body["error"]["details"] = details
    return body


def _error_response(status: int, code: str, message: str, details=None) -> JSONResponse:
    return JSONResponse(status_code=status, content=_error_body(code, message, details))


def _require_str(obj: dict, key: str, default=None) -> str | None:
    value = obj.get(key, default)
    if value is not None and not isinstance(value, str):
        raise ValidationError(f"{key} must be a string")
    return value


def _require_int(obj: dict, key: str, default=None) -> int | None:
    value = obj.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{key} must be an integer")
    return value


def _step_record_obj(record) -> dict:
    return {
        "index": record.index,
        "instruction": record.instruction,
        "asset_ref": record.asset_ref,
        "elements": [_element_to_obj(el) for el in record.elements],
    }


def create_app(
    engine: Engine | None = None,
    store: SessionStore | None = None,
    env=None,
) -> FastAPI:
    """Build the application; engine and store are injectable for tests."""
    env = os.environ if env is None else env
    if engine is None:
        from .backends import generator_from_env, refiner_from_env

        engine = Engine(
            generator=generator_from_env(env), refiner=refiner_from_env(env)
        )
    if store is None:
        store = SessionStore(env.get(STORE_DIR_ENV) or DEFAULT_STORE_DIR)

    app = FastAPI(title="sledge", version=__version__, docs_url=None, redoc_url=None)
    app.state.engine = engine
    app.state.store = store

    origins = [o.strip() for o in env.get(CORS_ENV, "*").split(",") if o.strip()]
    app.add_middleware(
        CORSMiddleware,
        allow_origins=origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SledgeError)
    async def _sledge_error(request: Request, exc: SledgeError):
        if isinstance(exc, (BackendError, ProtocolError)):
            status = 502
        elif isinstance(exc, CorruptDocumentError):
            status = 500
        elif isinstance(exc, RangeError):
            status = 404
        else:
            status = 422
        return _error_response(status, exc.code, str(exc), exc.details)

    def _load(session_id: str) -> Session:
        try:
            return store.get(session_id)
        except KeyError:
            raise RangeError(f"no such session: {session_id}")

    @app.get("/healthz")
    async def healthz():
        from ._kernels import BACKEND

        return {"status": "ok", "version": __version__, "kernels": BACKEND}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = {}
        if (await request.body()).strip():
            body = await request.json()
            if not isinstance(body, dict):
                raise ValidationError("request body must be a JSON object")
        width = _require_int(body, "width", 1024)
        height = _require_int(body, "height", 1024)
        background = _require_str(body, "background")
        theme = _require_str(body, "theme")
        color = parse_hex_color(background) if background else OPAQUE_WHITE
        session = new_session(width, height, background=color, theme=theme)
        store.commit(session)
        return {
            "id": session.id,
            "width": width,
            "height": height,
            "background": format_hex_color(color),
            "theme": theme,
            "cursor": 0,
        }

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        session = _load(session_id)
        doc = session.document
        return {
            "id": session.id,
            "width": doc.canvas_width,
            "height": doc.canvas_height,
            "background": format_hex_color(doc.background),
            "theme": doc.theme,
            "cursor": session.cursor,
            "step_count": len(doc.steps),
            "can_undo": session.can_undo,
            "can_redo": session.can_redo,
        }

    @app.post("/sessions/{session_id}/steps")
    async def post_step(session_id: str, request: Request):
        content_type = request.headers.get("content-type", "")
        asset = None
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            body = {
                "instruction": form.get("instruction"),
                "seed": form.get("seed", "0"),
            }
            if "refine" in form:
                body["refine"] = form.get("refine")
            if "dilation_radius" in form:
                body["dilation_radius"] = form.get("dilation_radius")
            upload = form.get("asset")
            if upload is not None:
                asset = Canvas(decode_png_rgba(await upload.read()))
            instruction = body["instruction"]
            if not isinstance(instruction, str):
                raise ValidationError("instruction field is required")
            try:
                seed = int(body["seed"])
                dilation_radius = (
                    int(body["dilation_radius"]) if "dilation_radius" in body else None
                )
            except (TypeError, ValueError):
                raise ValidationError("seed and dilation_radius must be integers")
            refine = str(body.get("refine", "true")).lower() != "false"
        else:
            body = await request.json()
            if not isinstance(body, dict):
                raise ValidationError("request body must be a JSON object")
            instruction = _require_str(body, "instruction")
            if instruction is None:
                raise ValidationError("instruction field is required")
            seed = _require_int(body, "seed", 0) or 0
            dilation_radius = _require_int(body, "dilation_radius")
            refine = body.get("refine", True)
            if not isinstance(refine, bool):
                raise ValidationError("refine must be a boolean")

        with store.lock(session_id):
            session = _load(session_id)
            new_state, outcome = engine.apply_step(
                session,
                instruction,
                asset=asset,
                seed=seed,
                dilation_radius=dilation_radius,
                refine=refine,
            )
            store.commit(new_state)
        return {
            "record": _step_record_obj(outcome.record),
            "cursor": new_state.cursor,
            "warnings": list(outcome.warnings),
        }

    @app.post("/sessions/{session_id}/undo")
    async def post_undo(session_id: str):
        with store.lock(session_id):
            session = _load(session_id)
            new_state, moved = undo(session)
            if moved:
                store.commit(new_state)
        return {"cursor": new_state.cursor, "moved": moved}

    @app.post("/sessions/{session_id}/redo")
    async def post_redo(session_id: str):
        with store.lock(session_id):
            session = _load(session_id)
            new_state, moved = redo(session)
            if moved:
                store.commit(new_state)
        return {"cursor": new_state.cursor, "moved": moved}

    @app.patch("/sessions/{session_id}/steps/{step_index}/elements/{element_index}")
    async def patch_element(
        session_id: str, step_index: int, element_index: int, request: Request
    ):
        body = await request.json()
        if not isinstance(body, dict):
            raise ValidationError("request body must be a JSON object")
        unknown = set(body) - {"content", "font_family", "font_size", "color", "bbox"}
        if unknown:
            raise ValidationError(f"unknown patch fields: {sorted(unknown)}")
        color = _require_str(body, "color")
        bbox = body.get("bbox")
        patch = TextPatch(
            content=_require_str(body, "content"),
            font_family=_require_str(body, "font_family"),
            font_size=_require_int(body, "font_size"),
            color=parse_hex_color(color) if color is not None else None,
            bbox=BBox.from_list(bbox) if bbox is not None else None,
        )
        with store.lock(session_id):
            session = _load(session_id)
            new_state = edit_text_attributes(session, step_index, element_index, patch)
            store.commit(new_state)
        record = new_state.document.steps[step_index]
        return {
            "record": _step_record_obj(record),
            "element": _element_to_obj(record.elements[element_index]),
        }

    @app.get("/sessions/{session_id}/canvas")
    async def get_canvas(session_id: str, step: int | None = None):
        session = _load(session_id)
        upto = session.cursor if step is None else step
        canvas = flatten(session.document, upto, engine.font_registry)
        return Response(content=encode_png(canvas.array), media_type="image/png")

    @app.get("/sessions/{session_id}/document")
    async def get_document(session_id: str):
        session = _load(session_id)
        return {"cursor": session.cursor, "document": document_to_obj(session.document)}

    @app.get("/sessions/{session_id}/layers/{step_index}")
    async def get_layer(session_id: str, step_index: int):
        session = _load(session_id)
        steps = session.document.steps
        if not 0 <= step_index < len(steps):
            raise RangeError(f"step index {step_index} out of range")
        layer = steps[step_index].image_layer
        if layer is None:
            raise RangeError(f"step {step_index} has no image layer")
        return Response(content=encode_png(layer.array), media_type="image/png")

    return app


def main(host: str = "127.0.0.1", port: int | None = None, env=None) -> None:
    """Run the service under uvicorn (used by `sledge serve`)."""
    import uvicorn

    env = os.environ if env is None else env
    if port is None:
        port = int(env.get(PORT_ENV, DEFAULT_PORT))
    uvicorn.run(create_app(env=env), host=host, port=port, log_level="info")

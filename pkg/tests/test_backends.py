"""Backend behaviors: mock generator, refiners, judges, retry policy."""

from __future__ import annotations

import base64
import json

import httpx
import numpy as np
import pytest

from sledge.backends import (
    ConnectedComponentRefiner,
    MockGenerator,
    NullRefiner,
    RemoteGenerator,
    RemoteJudge,
    RemoteRefiner,
    ScriptedJudge,
    attachment_digest,
    generator_from_env,
    judge_from_env,
    refiner_from_env,
)
from sledge.backends.base import GeneratorRequest, call_with_retries
from sledge.canvas import BBox, Canvas, decode_png_rgba, encode_mask_png, new_canvas
from sledge.compositor import Mask, bbox_mask
from sledge.errors import (
    BackendError,
    FixtureError,
    ProtocolError,
    ValidationError,
)
from sledge.metadata import serialize_reply
from tests.conftest import random_canvas


def mock_client(handler) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


# --- mock generator ---


def test_mock_generate_is_deterministic():
    gen = MockGenerator()
    canvas = new_canvas(128, 96)
    req = GeneratorRequest(instruction='Add "SALE" to the top', canvas=canvas, seed=9)
    a = gen.generate(req)
    b = gen.generate(req)
    assert serialize_reply(a) == serialize_reply(b)
    c = gen.generate(
        GeneratorRequest(instruction='Add "SALE" to the top', canvas=canvas, seed=10)
    )
    assert serialize_reply(c) != serialize_reply(a)


def test_mock_quoted_text_becomes_elements():
    gen = MockGenerator()
    reply = gen.generate(
        GeneratorRequest(
            instruction='Add "GRAND OPENING" and "50% OFF" labels',
            canvas=new_canvas(256, 256),
        )
    )
    texts = [el for el in reply.elements if el.is_text()]
    assert [el.content for el in texts] == ["GRAND OPENING", "50% OFF"]
    assert reply.image_payload is None


def test_mock_background_fills_canvas():
    gen = MockGenerator()
    reply = gen.generate(
        GeneratorRequest(
            instruction="Add a background of warm colors", canvas=new_canvas(64, 48)
        )
    )
    images = [el for el in reply.elements if el.is_image()]
    assert len(images) == 1
    assert images[0].bbox == BBox(0, 0, 64, 48)
    assert images[0].caption == "background"
    assert reply.image_payload is not None
    edited = decode_png_rgba(reply.image_payload)
    assert edited.shape == (48, 64, 4)


def test_mock_hint_places_top_left():
    gen = MockGenerator()
    reply = gen.generate(
        GeneratorRequest(
            instruction="Add a photo of a lake in the top-left",
            canvas=new_canvas(200, 100),
        )
    )
    images = [el for el in reply.elements if el.is_image()]
    assert len(images) == 1
    box = images[0].bbox
    assert box.x1 <= 100 and box.y1 <= 50  # fully inside the top-left quadrant


def test_mock_hint_corner_beats_edge():
    gen = MockGenerator()
    canvas = new_canvas(200, 100)
    tl = gen.generate(
        GeneratorRequest(instruction="photo at the top left corner", canvas=canvas)
    )
    top = gen.generate(GeneratorRequest(instruction="photo at the top", canvas=canvas))
    tl_box = [el for el in tl.elements if el.is_image()][0].bbox
    top_box = [el for el in top.elements if el.is_image()][0].bbox
    assert tl_box.x0 < top_box.x0  # corner hugs the left edge, "top" centers


def test_mock_asset_is_scaled_into_region():
    gen = MockGenerator()
    asset = Canvas(
        np.arange(4 * 4 * 4, dtype=np.uint8).reshape(4, 4, 4)
    )
    reply = gen.generate(
        GeneratorRequest(
            instruction="Place the logo at the bottom",
            canvas=new_canvas(100, 100),
            asset=asset,
        )
    )
    images = [el for el in reply.elements if el.is_image()]
    assert len(images) == 1 and images[0].caption == "asset"
    assert reply.image_payload is not None


def test_mock_plain_instruction_becomes_text():
    gen = MockGenerator()
    reply = gen.generate(
        GeneratorRequest(instruction="Summer vibes", canvas=new_canvas(64, 64))
    )
    assert len(reply.elements) == 1
    el = reply.elements[0]
    assert el.is_text() and el.content == "Summer vibes"


def test_generator_request_validation():
    with pytest.raises(ValidationError):
        GeneratorRequest(instruction="", canvas=new_canvas(8, 8)).validate()
    with pytest.raises(ValidationError):
        GeneratorRequest(instruction="x", canvas=new_canvas(8, 8), seed=-1).validate()


# --- refiners ---


def test_null_refiner_returns_nothing(rng):
    base = random_canvas(rng, 8, 8)
    assert NullRefiner().refine(base, base, bbox_mask([BBox(0, 0, 4, 4)], 8, 8)) == ()


def test_cc_refiner_keeps_only_intersecting_components(rng):
    base = new_canvas(40, 40, (0, 0, 0, 255))
    edited = base.mutable_copy()
    edited[5:10, 5:10] = (255, 255, 255, 255)    # inside reference
    edited[30:35, 30:35] = (255, 255, 255, 255)  # far away, outside reference
    edited_canvas = Canvas(edited)
    reference = bbox_mask([BBox(0, 0, 15, 15)], 40, 40)
    candidates = ConnectedComponentRefiner().refine(base, edited_canvas, reference)
    assert len(candidates) == 1
    values = candidates[0].values
    assert values[5:10, 5:10].all()
    assert not values[30:35, 30:35].any()


def test_cc_refiner_appends_union_for_multiple_components():
    base = new_canvas(40, 40, (0, 0, 0, 255))
    edited = base.mutable_copy()
    edited[2:6, 2:6] = (255, 255, 255, 255)
    edited[10:14, 10:14] = (255, 255, 255, 255)
    reference = bbox_mask([BBox(0, 0, 20, 20)], 40, 40)
    candidates = ConnectedComponentRefiner().refine(base, Canvas(edited), reference)
    assert len(candidates) == 3  # two components plus their union
    union = candidates[-1]
    assert union.popcount() == candidates[0].popcount() + candidates[1].popcount()


def test_cc_refiner_no_diff_and_no_intersection():
    base = new_canvas(20, 20, (9, 9, 9, 255))
    reference = bbox_mask([BBox(0, 0, 5, 5)], 20, 20)
    refiner = ConnectedComponentRefiner()
    assert refiner.refine(base, base, reference) == ()
    edited = base.mutable_copy()
    edited[15:18, 15:18] = (200, 0, 0, 255)
    assert refiner.refine(base, Canvas(edited), reference) == ()


def test_cc_refiner_threshold_gates_small_diffs():
    base = new_canvas(10, 10, (100, 100, 100, 255))
    edited = base.mutable_copy()
    edited[0:3, 0:3] = (104, 104, 104, 255)  # below the default threshold of 8
    reference = bbox_mask([BBox(0, 0, 10, 10)], 10, 10)
    assert ConnectedComponentRefiner().refine(base, Canvas(edited), reference) == ()
    assert len(
        ConnectedComponentRefiner(diff_threshold=3).refine(
            base, Canvas(edited), reference
        )
    ) == 1


def test_remote_refiner_round_trip(rng):
    reference = bbox_mask([BBox(0, 0, 6, 6)], 12, 12)
    proposal = bbox_mask([BBox(1, 1, 5, 5)], 12, 12)

    def handler(request: httpx.Request) -> httpx.Response:
        assert request.url.path == "/v1/refine"
        body = {"masks": [base64.b64encode(encode_mask_png(proposal.values)).decode()]}
        return httpx.Response(200, json=body)

    refiner = RemoteRefiner("http://refine.test", client=mock_client(handler))
    base = random_canvas(rng, 12, 12)
    got = refiner.refine(base, base, reference)
    assert got == (proposal,)


def test_remote_refiner_degrades_to_empty_on_failure(rng):
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(500, text="boom")

    refiner = RemoteRefiner("http://refine.test", client=mock_client(handler))
    base = random_canvas(rng, 8, 8)
    assert refiner.refine(base, base, bbox_mask([BBox(0, 0, 4, 4)], 8, 8)) == ()


def test_remote_refiner_rejects_wrong_dimensions(rng):
    wrong = bbox_mask([BBox(0, 0, 3, 3)], 6, 6)

    def handler(request: httpx.Request) -> httpx.Response:
        body = {"masks": [base64.b64encode(encode_mask_png(wrong.values)).decode()]}
        return httpx.Response(200, json=body)

    refiner = RemoteRefiner("http://refine.test", client=mock_client(handler))
    base = random_canvas(rng, 8, 8)
    assert refiner.refine(base, base, bbox_mask([BBox(0, 0, 4, 4)], 8, 8)) == ()


# --- judges ---


def test_scripted_judge_replays_and_sticks():
    judge = ScriptedJudge().add("tmpl", (b"img",), ["first", "second"])
    assert judge.ask("tmpl", "q", (b"img",)) == "first"
    assert judge.ask("tmpl", "q", (b"img",)) == "second"
    assert judge.ask("tmpl", "q", (b"img",)) == "second"  # last reply is sticky
    assert len(judge.calls) == 3


def test_scripted_judge_unknown_key():
    judge = ScriptedJudge()
    with pytest.raises(FixtureError):
        judge.ask("tmpl", "q", (b"img",))
    with pytest.raises(FixtureError):
        judge.add("tmpl", (b"img",), [])


def test_scripted_judge_keys_on_attachments():
    judge = (
        ScriptedJudge()
        .add("tmpl", (b"a",), "reply-a")
        .add("tmpl", (b"b",), "reply-b")
        .add("tmpl", (b"a", b"b"), "reply-ab")
    )
    assert judge.ask("tmpl", "ignored", (b"b",)) == "reply-b"
    assert judge.ask("tmpl", "ignored", (b"a", b"b")) == "reply-ab"
    assert attachment_digest((b"a",)) != attachment_digest((b"b",))


def test_remote_judge_ok_and_auth_header():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"text": "4"})

    judge = RemoteJudge("http://judge.test", api_key="sk-x", client=mock_client(handler))
    reply = judge.ask("tmpl", "prompt text", (b"png-bytes",))
    assert reply == "4"
    assert seen["auth"] == "Bearer sk-x"
    assert seen["body"]["template_id"] == "tmpl"
    assert base64.b64decode(seen["body"]["images"][0]) == b"png-bytes"


def test_remote_judge_retries_5xx_then_succeeds():
    attempts = []

    def handler(request: httpx.Request) -> httpx.Response:
        attempts.append(1)
        if len(attempts) < 2:
            return httpx.Response(503, text="busy")
        return httpx.Response(200, json={"text": "ok"})

    judge = RemoteJudge("http://judge.test", client=mock_client(handler))
    reply = judge.ask("tmpl", "q", ())
    assert reply == "ok"
    assert len(attempts) == 2


def test_remote_judge_4xx_fails_fast():
    attempts = []

    def handler(request: httpx.Request) -> httpx.Response:
        attempts.append(1)
        return httpx.Response(400, text="bad request")

    judge = RemoteJudge("http://judge.test", client=mock_client(handler))
    with pytest.raises(BackendError):
        judge.ask("tmpl", "q", ())
    assert len(attempts) == 1


def test_remote_judge_bad_body_is_protocol_error():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"wrong": "shape"})

    judge = RemoteJudge("http://judge.test", retries=0, client=mock_client(handler))
    with pytest.raises(ProtocolError):
        judge.ask("tmpl", "q", ())


# --- remote generator ---


def make_wire_reply() -> bytes:
    from sledge.metadata import GeneratorReply, text_element

    reply = GeneratorReply(
        elements=(
            text_element(BBox(0, 0, 50, 20), "REMOTE", "sans", 12, (0, 0, 0, 255)),
        )
    )
    return serialize_reply(reply)


def test_remote_generator_round_trip():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["path"] = request.url.path
        seen["content_type"] = request.headers.get("content-type", "")
        return httpx.Response(200, content=make_wire_reply())

    gen = RemoteGenerator("http://gen.test", client=mock_client(handler))
    reply = gen.generate(
        GeneratorRequest(instruction="add title", canvas=new_canvas(64, 64), seed=1)
    )
    assert reply.elements[0].content == "REMOTE"
    assert seen["path"] == "/v1/generate"
    assert seen["content_type"].startswith("multipart/form-data")


def test_remote_generator_5xx_retries_then_protocol_error():
    attempts = []

    def handler(request: httpx.Request) -> httpx.Response:
        attempts.append(1)
        return httpx.Response(502, text="upstream")

    gen = RemoteGenerator("http://gen.test", retries=1, client=mock_client(handler))
    with pytest.raises(ProtocolError):
        gen.generate(GeneratorRequest(instruction="x", canvas=new_canvas(8, 8)))
    assert len(attempts) == 2  # initial try plus one retry


def test_remote_generator_4xx_is_backend_error():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(422, text="nope")

    gen = RemoteGenerator("http://gen.test", client=mock_client(handler))
    with pytest.raises(BackendError):
        gen.generate(GeneratorRequest(instruction="x", canvas=new_canvas(8, 8)))


def test_remote_generator_malformed_reply_is_protocol_error():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, content=b"not a wire reply")

    gen = RemoteGenerator("http://gen.test", retries=0, client=mock_client(handler))
    with pytest.raises(ProtocolError):
        gen.generate(GeneratorRequest(instruction="x", canvas=new_canvas(8, 8)))


# --- retry helper ---


def test_call_with_retries_backoff_and_exhaustion():
    sleeps: list[float] = []
    attempts = []

    def flaky():
        attempts.append(1)
        raise ProtocolError("always fails")

    with pytest.raises(ProtocolError):
        call_with_retries(
            flaky, retryable=(ProtocolError,), attempts=3, sleep=sleeps.append
        )
    assert len(attempts) == 3
    assert sleeps == [0.5, 1.0]  # exponential backoff between attempts


def test_call_with_retries_non_retryable_raises_immediately():
    attempts = []

    def bad():
        attempts.append(1)
        raise BackendError("permanent")

    with pytest.raises(BackendError):
        call_with_retries(bad, retryable=(ProtocolError,), attempts=5, sleep=lambda _: None)
    assert len(attempts) == 1


def test_call_with_retries_success_after_failure():
    state = {"n": 0}

    def sometimes():
        state["n"] += 1
        if state["n"] < 2:
            raise ProtocolError("once")
        return "done"

    assert (
        call_with_retries(
            sometimes, retryable=(ProtocolError,), attempts=3, sleep=lambda _: None
        )
        == "done"
    )


# --- env factories ---


def test_generator_from_env_defaults_to_mock():
    assert isinstance(generator_from_env({}), MockGenerator)
    assert isinstance(generator_from_env({"SLEDGE_BACKEND": "mock"}), MockGenerator)


def test_generator_from_env_remote_requires_url():
    with pytest.raises(ValidationError):
        generator_from_env({"SLEDGE_BACKEND": "remote"})
    gen = generator_from_env(
        {"SLEDGE_BACKEND": "remote", "SLEDGE_GENERATOR_URL": "http://g.test"}
    )
    assert isinstance(gen, RemoteGenerator)
    assert gen.url == "http://g.test"


def test_refiner_from_env_default_and_remote():
    assert isinstance(refiner_from_env({}), NullRefiner)
    ref = refiner_from_env({"SLEDGE_REFINER_URL": "http://r.test"})
    assert isinstance(ref, RemoteRefiner)


def test_judge_from_env():
    judge = judge_from_env({"SLEDGE_JUDGE_URL": "http://j.test", "SLEDGE_JUDGE_API_KEY": "k"})
    assert isinstance(judge, RemoteJudge)
    assert judge.api_key == "k"

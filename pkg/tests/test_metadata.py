"""Element metadata and the generator wire format.

The round-trip property parse(serialize(x)) == x is the oracle for the
framing grammar, exercised with payload bytes chosen to look like JSON,
braces, and sentinel fragments.
"""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from sledge.canvas import BBox
from sledge.errors import ParseError, SemanticError, SentinelError, ValidationError
from sledge.metadata import (
    GeneratorReply,
    KIND_IMAGE,
    KIND_TEXT,
    MIN_FONT_SIZE,
    image_element,
    parse_reply,
    serialize_reply,
    text_element,
)

FAMILIES = ("sans", "serif", "sans-bold", "serif-bold", "script", "mono")

NASTY_PAYLOADS = [
    b"",
    b"{}",
    b'{"elements": []}',
    b"</img>",  # close sentinel inside payload is fine: parser anchors at the end
    b"<img>",
    b'{"elements": [{"kind": "text"}]}</img><img>',
    bytes(range(256)),
    b"\x89PNG\r\n\x1a\n" + bytes(random.Random(1).randbytes(64)),
    b'{"a": "}"}' * 3,
]


def random_element(rng: random.Random, width=64, height=64):
    x0 = rng.randint(0, width - 2)
    y0 = rng.randint(0, height - 2)
    box = BBox(x0, y0, rng.randint(x0 + 1, width), rng.randint(y0 + 1, height))
    if rng.random() < 0.5:
        content = "".join(
            rng.choice('abc XYZ 09 "quoted" {} [] \\ / é你')
            for _ in range(rng.randint(1, 20))
        ).strip() or "x"
        return text_element(
            box,
            content,
            rng.choice(FAMILIES),
            rng.randint(MIN_FONT_SIZE, 40),
            (rng.randint(0, 255), rng.randint(0, 255), rng.randint(0, 255), 255),
        )
    caption = rng.choice([None, "photo of a lake", "background"])
    return image_element(box, caption)


def random_reply(rng: random.Random) -> GeneratorReply:
    elements = tuple(random_element(rng) for _ in range(rng.randint(1, 6)))
    payload = None
    if any(el.kind == KIND_IMAGE for el in elements):
        payload = rng.choice(NASTY_PAYLOADS) if rng.random() < 0.5 else rng.randbytes(
            rng.randint(0, 128)
        )
    return GeneratorReply(elements=elements, image_payload=payload)


def test_round_trip_thousand_replies():
    rng = random.Random(2024)
    for _ in range(1000):
        reply = random_reply(rng)
        again = parse_reply(serialize_reply(reply))
        assert again == reply


def test_parse_plain_json_reply():
    raw = json.dumps(
        {
            "elements": [
                {
                    "kind": "text",
                    "bbox": [0, 0, 10, 10],
                    "content": "SALE",
                    "font_family": "sans",
                    "font_size": 12,
                    "color": "#112233FF",
                }
            ]
        }
    ).encode()
    reply = parse_reply(raw)
    assert reply.image_payload is None
    el = reply.elements[0]
    assert el.kind == KIND_TEXT
    assert el.content == "SALE"
    assert el.color == (0x11, 0x22, 0x33, 255)


def test_parse_reply_with_payload_framing():
    inner = b'{"elements": [{"kind": "fake"}]}'  # JSON lookalike inside payload
    raw = (
        b'{"elements": [{"kind": "image", "bbox": [0, 0, 4, 4]}]}'
        b"<img>" + inner + b"</img>"
    )
    reply = parse_reply(raw)
    assert reply.image_payload == inner
    assert reply.elements[0].kind == KIND_IMAGE


def test_parse_rejects_malformed_framing():
    head = b'{"elements": [{"kind": "image", "bbox": [0, 0, 4, 4]}]}'
    with pytest.raises(SentinelError):
        parse_reply(head + b"garbage-without-sentinel")
    with pytest.raises(SentinelError):
        parse_reply(head + b"<img>unterminated")
    with pytest.raises(SentinelError):
        parse_reply(head + b"<img>data</img>trailing")


def test_parse_rejects_bad_json():
    with pytest.raises(ParseError):
        parse_reply(b"not json at all")
    with pytest.raises(ParseError):
        parse_reply(b'{"elements": ')
    with pytest.raises(ParseError):
        parse_reply(b'{"no_elements": []}')
    with pytest.raises(SemanticError):
        parse_reply(b'{"elements": [{"kind": "sound", "bbox": [0, 0, 1, 1]}]}')


def test_element_validation():
    box = BBox(0, 0, 10, 10)
    with pytest.raises(ValidationError):
        text_element(box, "", "sans", 12, (0, 0, 0, 255)).validate()
    with pytest.raises(ValidationError):
        text_element(box, "hi", "sans", MIN_FONT_SIZE - 1, (0, 0, 0, 255)).validate()
    with pytest.raises(ValidationError):
        text_element(box, "hi", "sans", 12, (0, 0, 256, 255)).validate()
    el = text_element(box, "hi", "sans", 12, (0, 0, 0, 255))
    assert el.validate() is el
    assert el.is_text() and not el.is_image()
    img = image_element(box)
    assert img.validate().is_image()


def test_text_element_patched():
    el = text_element(BBox(0, 0, 8, 8), "hi", "sans", 12, (0, 0, 0, 255))
    changed = el.patched(content="yo", color=(255, 0, 0, 255))
    assert changed.content == "yo"
    assert changed.color == (255, 0, 0, 255)
    assert changed.bbox == el.bbox
    assert el.content == "hi"  # original untouched


def test_reply_validation():
    with pytest.raises(ValidationError):
        GeneratorReply(elements=()).validate()
    el = image_element(BBox(0, 0, 4, 4))
    assert GeneratorReply(elements=(el,), image_payload=b"x").validate()


@settings(max_examples=100, deadline=None)
@given(st.binary(max_size=200))
def test_round_trip_arbitrary_payload(payload):
    reply = GeneratorReply(
        elements=(image_element(BBox(0, 0, 4, 4)),), image_payload=payload
    )
    assert parse_reply(serialize_reply(reply)) == reply


content_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")),
    min_size=1,
    max_size=60,
).filter(lambda s: s.strip())


@settings(max_examples=60, deadline=None)
@given(content_text)
def test_round_trip_arbitrary_text_content(content):
    reply = GeneratorReply(
        elements=(
            text_element(BBox(0, 0, 20, 20), content, "sans", 12, (1, 2, 3, 255)),
        )
    )
    assert parse_reply(serialize_reply(reply)) == reply

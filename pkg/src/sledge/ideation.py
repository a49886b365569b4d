"""Dataset and benchmark pipelines: bundles to triplets, themes to instructions.

Two pipelines share this module. The dataset side decomposes a layered
design bundle into chained (before, instruction, after) training triplets by
replaying its elements in order. The benchmark side turns short themes into
8-10 step instruction sequences through an LLM client, then filters them
with a second prompt. Both run fully offline with scripted clients.
"""

from __future__ import annotations

import ast
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .canvas import (
    RGBA,
    Canvas,
    OPAQUE_WHITE,
    decode_png_rgba,
    encode_png,
    format_hex_color,
    parse_hex_color,
    new_canvas,
)
from .compositor import paint_region
from .errors import GenerationError, ValidationError
from .metadata import ElementMetadata, _element_from_obj, _element_to_obj
from .prompts import fill_template

log = logging.getLogger(__name__)

JACCARD_THRESHOLD = 0.6
MIN_STEPS = 8
MAX_STEPS = 10
DEFAULT_IN_FLIGHT = 4


@dataclass(frozen=True)
class BundleElement:
    """One design layer: its raster (bbox-sized RGBA) plus its metadata."""

    raster: Canvas
    metadata: ElementMetadata

    def validate(self) -> "BundleElement":
        self.metadata.validate()
        bbox = self.metadata.bbox
        if (self.raster.width, self.raster.height) != (bbox.width, bbox.height):
            raise ValidationError(
                f"element raster {self.raster.width}x{self.raster.height} does not "
                f"match bbox {bbox.width}x{bbox.height}"
            )
        return self


@dataclass(frozen=True)
class LayeredBundle:
    """A finished design plus the individual layers it decomposes into."""

    composite: Canvas
    elements: tuple[BundleElement, ...]
    source_id: str
    background: RGBA = OPAQUE_WHITE

    def validate(self) -> "LayeredBundle":
        if not self.elements:
            raise ValidationError("a bundle needs at least one element")
        for el in self.elements:
            el.validate()
            el.metadata.bbox.validate_within(
                self.composite.width, self.composite.height, what="bundle element bbox"
            )
        return self


@dataclass(frozen=True)
class Triplet:
    """One training datapoint: canvas before, the edit, canvas after."""

    before: Canvas
    instruction: str
    after: Canvas
    metadata: tuple[ElementMetadata, ...]


@dataclass(frozen=True)
class Theme:
    """A short design theme plus the model tag that produced it."""

    text: str
    source: str = "unknown"

    def validate(self) -> "Theme":
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValidationError("theme text must be non-empty")
        return self


def heuristic_order(bundle: LayeredBundle) -> list[int]:
    """Largest-area first (backgrounds lead), ties by top-left scan order."""
    keys = []
    for i, el in enumerate(bundle.elements):
        bbox = el.metadata.bbox
        keys.append((-bbox.area, bbox.y0, bbox.x0, i))
    return [k[-1] for k in sorted(keys)]


def _parse_permutation(reply: str, count: int) -> list[int] | None:
    try:
        value = json.loads(reply)
    except (ValueError, TypeError):
        try:
            value = ast.literal_eval(reply.strip())
        except (ValueError, SyntaxError, TypeError):
            return None
    if (
        isinstance(value, list)
        and sorted(value) == list(range(count))
        and all(isinstance(v, int) for v in value)
    ):
        return value
    return None


def order_elements(
    bundle: LayeredBundle,
    orderer=None,
    warnings: list[str] | None = None,
) -> list[int]:
    """Placement order for the bundle's elements, as an index permutation.

    ``orderer`` is an optional callable receiving the bundle and returning a
    permutation string such as "[2, 0, 1]". An invalid reply is reprompted
    once, then the deterministic heuristic takes over with a warning.
    """
    bundle.validate()
    if orderer is None:
        return heuristic_order(bundle)
    for _ in range(2):
        reply = orderer(bundle)
        order = _parse_permutation(reply, len(bundle.elements))
        if order is not None:
            return order
    message = "orderer reply was not a valid permutation; using heuristic order"
    log.warning(message)
    if warnings is not None:
        warnings.append(message)
    return heuristic_order(bundle)


def build_triplets(
    bundle: LayeredBundle, order: list[int], instructions: list[str]
) -> list[Triplet]:
    """Chain the bundle's elements into k training triplets.

    Triplet i starts from the composite of elements order[0..i) over the
    background and adds element order[i]; instruction i belongs to that
    element (``instructions`` is indexed by original element position).
    """
    bundle.validate()
    if sorted(order) != list(range(len(bundle.elements))):
        raise ValidationError(f"order must be a permutation, got {order}")
    if len(instructions) != len(bundle.elements):
        raise ValidationError(
            f"need one instruction per element: "
            f"{len(instructions)} for {len(bundle.elements)}"
        )
    canvas = new_canvas(bundle.composite.width, bundle.composite.height, bundle.background)
    triplets = []
    for position in order:
        element = bundle.elements[position]
        after = paint_region(canvas, element.raster.array, element.metadata.bbox)
        triplets.append(
            Triplet(
                before=canvas,
                instruction=instructions[position],
                after=after,
                metadata=(element.metadata,),
            )
        )
        canvas = after
    return triplets


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall(text.lower()))


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union


def dedup_themes(themes: list[Theme]) -> list[Theme]:
    """Drop near-duplicate themes (token-set Jaccard >= 0.6), keeping firsts."""
    kept: list[Theme] = []
    kept_tokens: list[frozenset[str]] = []
    for theme in themes:
        theme.validate()
        tokens = _tokens(theme.text)
        if any(_jaccard(tokens, seen) >= JACCARD_THRESHOLD for seen in kept_tokens):
            continue
        kept.append(theme)
        kept_tokens.append(tokens)
    return kept


def _parse_step_dict(reply: str) -> list[str] | None:
    """Extract ordered step texts from a dictionary-shaped LLM reply."""
    text = reply.strip()
    start, end = text.find("{"), text.rfind("}")
    if start == -1 or end <= start:
        return None
    text = text[start : end + 1]
    try:
        value = json.loads(text)
    except ValueError:
        try:
            value = ast.literal_eval(text)
        except (ValueError, SyntaxError, TypeError):
            return None
    if not isinstance(value, dict) or not value:
        return None
    items = list(value.items())
    keys = [str(k) for k, _ in items]
    if all(re.fullmatch(r"\D*(\d+)\D*", k) for k in keys):
        items.sort(key=lambda kv: int(re.search(r"\d+", str(kv[0])).group()))
    steps = [v for _, v in items]
    if not all(isinstance(s, str) and s.strip() for s in steps):
        return None
    return steps


def generate_instructions(theme: Theme, client) -> list[str]:
    """Ask the LLM client for this theme's 8-10 step instruction sequence.

    ``client`` maps a prompt string to a reply string. A reply that fails to
    parse as a step dictionary, or whose step count falls outside [8, 10],
    is reprompted once; a second failure rejects the theme.
    """
    theme.validate()
    prompt = fill_template("benchmark-generation", {"theme": theme.text})
    failure = "unparsable reply"
    for _ in range(2):
        steps = _parse_step_dict(client(prompt))
        if steps is None:
            failure = "unparsable reply"
            continue
        if not (MIN_STEPS <= len(steps) <= MAX_STEPS):
            failure = f"{len(steps)} steps outside [{MIN_STEPS}, {MAX_STEPS}]"
            continue
        return steps
    raise GenerationError(f"theme {theme.text!r} rejected: {failure}")


def render_instruction_list(instructions: list[str]) -> str:
    return "\n".join(f"{i + 1}. {text}" for i, text in enumerate(instructions))


def filter_instructions(
    sequences: list[list[str]], client, warnings: list[str] | None = None
) -> list[list[str]]:
    """Keep sequences the filtering prompt judges coherent ("Yes").

    Replies other than yes/no are retried once, then the sequence is kept
    conservatively with a warning. Returns kept sequences in input order.
    """
    kept = []
    for index, instructions in enumerate(sequences):
        prompt = fill_template(
            "instruction-filtering",
            {"instructions": render_instruction_list(instructions)},
        )
        verdict = None
        for _ in range(2):
            reply = client(prompt).strip().strip('."!').lower()
            if reply in ("yes", "no"):
                verdict = reply
                break
        if verdict is None:
            message = f"sequence {index}: unparsable filter verdict, keeping it"
            log.warning(message)
            if warnings is not None:
                warnings.append(message)
            verdict = "yes"
        if verdict == "yes":
            kept.append(instructions)
    return kept


def generate_for_themes(
    themes: list[Theme], client, max_in_flight: int = DEFAULT_IN_FLIGHT
) -> dict[str, list[str] | None]:
    """Instruction sequences for many themes; rejected themes map to None."""

    def one(theme: Theme) -> list[str] | None:
        try:
            return generate_instructions(theme, client)
        except GenerationError as exc:
            log.warning("%s", exc)
            return None

    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        results = list(pool.map(one, themes))
    return {theme.text: result for theme, result in zip(themes, results)}


# --- bundle and dataset directory formats ---

BUNDLE_JSON = "bundle.json"
COMPOSITE_PNG = "composite.png"


def save_bundle_dir(path: str | Path, bundle: LayeredBundle) -> Path:
    bundle.validate()
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    elements = []
    for i, el in enumerate(bundle.elements):
        raster_name = f"element_{i}.png"
        (root / raster_name).write_bytes(encode_png(el.raster.array))
        obj = _element_to_obj(el.metadata)
        obj["raster"] = raster_name
        elements.append(obj)
    manifest = {
        "source_id": bundle.source_id,
        "canvas_width": bundle.composite.width,
        "canvas_height": bundle.composite.height,
        "background": format_hex_color(bundle.background),
        "composite": COMPOSITE_PNG,
        "elements": elements,
    }
    (root / COMPOSITE_PNG).write_bytes(encode_png(bundle.composite.array))
    (root / BUNDLE_JSON).write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return root


def load_bundle_dir(path: str | Path) -> LayeredBundle:
    root = Path(path)
    manifest_file = root / BUNDLE_JSON
    if not manifest_file.is_file():
        raise ValidationError(f"not a bundle directory (no {BUNDLE_JSON}): {root}")
    manifest = json.loads(manifest_file.read_text(encoding="utf-8"))
    composite = Canvas(decode_png_rgba((root / manifest["composite"]).read_bytes()))
    elements = []
    for i, obj in enumerate(manifest["elements"]):
        raster_name = obj.pop("raster")
        raster = Canvas(decode_png_rgba((root / raster_name).read_bytes()))
        elements.append(BundleElement(raster=raster, metadata=_element_from_obj(obj, i)))
    return LayeredBundle(
        composite=composite,
        elements=tuple(elements),
        source_id=str(manifest["source_id"]),
        background=parse_hex_color(manifest["background"]),
    ).validate()


def instruction_for_element(el: ElementMetadata, position: int, total: int) -> str:
    """Deterministic instruction text for dataset building without an LLM."""
    if el.is_text():
        return (
            f'Add the text "{el.content}" in a {el.font_family} font '
            f"at position {el.bbox.as_list()}."
        )
    if position == 0 and total > 1:
        what = el.caption or "a background image"
        return f"Create {what}, covering the region {el.bbox.as_list()}."
    what = el.caption or "an image"
    return f"Place {what} in the region {el.bbox.as_list()}."


def write_triplets(out_dir: str | Path, triplets: list[Triplet], start: int = 0) -> int:
    """Write numbered triplet folders; returns the next free index."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    for offset, triplet in enumerate(triplets):
        folder = root / f"{start + offset:06d}"
        folder.mkdir(exist_ok=True)
        (folder / "before.png").write_bytes(encode_png(triplet.before.array))
        (folder / "after.png").write_bytes(encode_png(triplet.after.array))
        (folder / "instruction.txt").write_text(
            triplet.instruction + "\n", encoding="utf-8"
        )
        (folder / "metadata.json").write_text(
            json.dumps(
                {"elements": [_element_to_obj(el) for el in triplet.metadata]},
                indent=2,
                ensure_ascii=False,
            )
            + "\n",
            encoding="utf-8",
        )
    return start + len(triplets)


def theme_slug(text: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")
    return slug or "theme"


def write_benchmark(
    out_dir: str | Path,
    themes: list[Theme],
    sequences: dict[str, list[str] | None],
) -> Path:
    """themes.json plus one instructions/<slug>.json per accepted theme."""
    root = Path(out_dir)
    (root / "instructions").mkdir(parents=True, exist_ok=True)
    (root / "themes.json").write_text(
        json.dumps(
            [{"text": t.text, "source": t.source} for t in themes],
            indent=2,
            ensure_ascii=False,
        )
        + "\n",
        encoding="utf-8",
    )
    for theme in themes:
        steps = sequences.get(theme.text)
        if steps is None:
            continue
        (root / "instructions" / f"{theme_slug(theme.text)}.json").write_text(
            json.dumps(
                {"theme": theme.text, "instructions": steps},
                indent=2,
                ensure_ascii=False,
            )
            + "\n",
            encoding="utf-8",
        )
    return root

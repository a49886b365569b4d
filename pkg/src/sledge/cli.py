"""Command-line interface.

Exit codes: 0 success, 1 validation/user error, 2 backend or transport
error. The CLI and the HTTP service share one engine code path, so renders
of the same document are byte-identical across both surfaces.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from pathlib import Path

import click

from .backends import generator_from_env, refiner_from_env
from .bundle import BUNDLE_SUFFIX, load_session, save_session
from .canvas import BBox, Canvas, OPAQUE_WHITE, decode_png_rgba, encode_png, parse_hex_color
from .document import TextPatch, edit_text_attributes, flatten, new_session
from .engine import Engine
from .errors import BackendError, ProtocolError, SledgeError, ValidationError
from .ideation import (
    Theme,
    build_triplets,
    dedup_themes,
    generate_for_themes,
    heuristic_order,
    instruction_for_element,
    load_bundle_dir,
    write_benchmark,
    write_triplets,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BACKEND = 2


class _Fail(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _wrap(func):
    """Map engine errors onto the documented exit codes."""

    def runner(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (BackendError, ProtocolError) as exc:
            raise _Fail(str(exc), EXIT_BACKEND)
        except (SledgeError, OSError) as exc:
            raise _Fail(str(exc), EXIT_VALIDATION)

    runner.__name__ = func.__name__
    runner.__doc__ = func.__doc__
    return runner


def _build_engine() -> Engine:
    return Engine(generator=generator_from_env(), refiner=refiner_from_env())


def _load_doc(doc: str):
    path = Path(doc)
    if not path.is_dir():
        raise ValidationError(f"no document bundle at {doc}")
    return load_session(path)


@click.group()
@click.version_option(package_name="sledge")
def main():
    """Layered step-by-step design engine."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None, help="Defaults to SLEDGE_PORT or 8787.")
@click.option("--store-dir", default=None, help="Defaults to SLEDGE_STORE_DIR.")
@_wrap
def serve(host: str, port: int | None, store_dir: str | None):
    """Run the HTTP service."""
    import os

    from .service import main as service_main

    if store_dir:
        os.environ["SLEDGE_STORE_DIR"] = store_dir
    service_main(host=host, port=port)


@main.command()
@click.option("--doc", required=True, help=f"Bundle path (*{BUNDLE_SUFFIX}).")
@click.option("--width", type=int, default=1024, show_default=True)
@click.option("--height", type=int, default=1024, show_default=True)
@click.option("--background", default="#FFFFFFFF", show_default=True)
@click.option("--theme", default=None)
@_wrap
def new(doc: str, width: int, height: int, background: str, theme: str | None):
    """Create an empty document bundle."""
    session = new_session(
        width, height, parse_hex_color(background), theme=theme,
        session_id=Path(doc).stem,
    )
    save_session(doc, session)
    click.echo(f"created {doc} ({width}x{height})")


@main.command()
@click.option("--doc", required=True, help="Bundle path; created if missing.")
@click.option("--instruction", required=True)
@click.option("--asset", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--dilation-radius", type=int, default=None)
@click.option("--no-refine", is_flag=True, default=False)
@_wrap
def step(
    doc: str,
    instruction: str,
    asset: str | None,
    seed: int,
    dilation_radius: int | None,
    no_refine: bool,
):
    """Apply one instruction to a document."""
    path = Path(doc)
    if path.is_dir():
        session = _load_doc(doc)
    else:
        session = new_session(1024, 1024, OPAQUE_WHITE, session_id=path.stem)
        click.echo(f"note: {doc} did not exist, starting a blank 1024x1024 document")
    asset_canvas = None
    if asset:
        asset_canvas = Canvas(decode_png_rgba(Path(asset).read_bytes()))
    engine = _build_engine()
    session, outcome = engine.apply_step(
        session,
        instruction,
        asset=asset_canvas,
        seed=seed,
        dilation_radius=dilation_radius,
        refine=not no_refine,
    )
    save_session(doc, session)
    for warning in outcome.warnings:
        click.echo(f"warning: {warning}", err=True)
    kinds = ", ".join(el.kind for el in outcome.record.elements)
    click.echo(f"step {outcome.record.index}: {kinds} -> {doc}")


@main.command()
@click.option("--doc", required=True)
@click.option("--upto", type=int, default=None, help="Steps to apply (default: cursor).")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_wrap
def render(doc: str, upto: int | None, out: str):
    """Render a document's canvas to PNG."""
    session = _load_doc(doc)
    if upto is None:
        upto = session.cursor
    canvas = flatten(session.document, upto)
    Path(out).write_bytes(encode_png(canvas.array))
    click.echo(f"rendered step {upto} -> {out}")


@main.command("edit-text")
@click.option("--doc", required=True)
@click.option("--step", "step_index", required=True, type=int)
@click.option("--element", "element_index", required=True, type=int)
@click.option("--content", default=None)
@click.option("--font", "font_family", default=None)
@click.option("--size", "font_size", type=int, default=None)
@click.option("--color", default=None, help="#RRGGBBAA")
@click.option("--bbox", default=None, help="x0,y0,x1,y1")
@_wrap
def edit_text(
    doc: str,
    step_index: int,
    element_index: int,
    content: str | None,
    font_family: str | None,
    font_size: int | None,
    color: str | None,
    bbox: str | None,
):
    """Patch a text element's attributes post-hoc."""
    session = _load_doc(doc)
    parsed_bbox = None
    if bbox is not None:
        try:
            parsed_bbox = BBox.from_list([int(v) for v in bbox.split(",")])
        except ValueError:
            raise ValidationError(f"bbox must be four integers, got {bbox!r}")
    patch = TextPatch(
        content=content,
        font_family=font_family,
        font_size=font_size,
        color=parse_hex_color(color) if color else None,
        bbox=parsed_bbox,
    )
    session = edit_text_attributes(session, step_index, element_index, patch)
    save_session(doc, session)
    click.echo(f"edited step {step_index} element {element_index}")


@main.group()
def dataset():
    """Dataset-building pipeline."""


@dataset.command("build")
@click.option("--bundles", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--sample", type=int, default=None, help="Also emit a review sheet of N triplets.")
@click.option("--seed", type=int, default=0, show_default=True)
@_wrap
def dataset_build(bundles: str, out: str, sample: int | None, seed: int):
    """Expand layered bundles into chained instruction triplets."""
    roots = sorted(
        p.parent for p in Path(bundles).glob("*/bundle.json")
    )
    if not roots:
        raise ValidationError(f"no bundle directories under {bundles}")
    next_index = 0
    written = []
    for root in roots:
        bundle = load_bundle_dir(root)
        order = heuristic_order(bundle)
        instructions = [
            instruction_for_element(el.metadata, order.index(i), len(order))
            for i, el in enumerate(bundle.elements)
        ]
        triplets = build_triplets(bundle, order, instructions)
        first = next_index
        next_index = write_triplets(out, triplets, start=next_index)
        written.extend(
            {"triplet": f"{first + k:06d}", "source_id": bundle.source_id}
            for k in range(len(triplets))
        )
    click.echo(f"wrote {next_index} triplets from {len(roots)} bundles -> {out}")
    if sample:
        rng = random.Random(seed)
        chosen = rng.sample(written, min(sample, len(written)))
        review = Path(out) / "review.json"
        review.write_text(
            json.dumps({"sample": chosen}, indent=2) + "\n", encoding="utf-8"
        )
        click.echo(f"review sheet with {len(chosen)} entries -> {review}")


@main.group()
def bench():
    """Benchmark-generation pipeline."""


def _offline_instruction_client(prompt: str) -> str:
    """Deterministic stand-in LLM: 8-10 plausible steps keyed by the theme."""
    marker = "The theme of the design is "
    theme = prompt[prompt.rfind(marker) + len(marker) :].rstrip(".")
    digest = hashlib.sha256(theme.encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    count = rng.randrange(8, 11)
    steps = [f"Create a background that fits the theme '{theme}', covering the canvas."]
    fillers = [
        f'Add a title with the text "{theme}" near the top.',
        "Place a large supporting image in the center.",
        "Add a decorative border around the edges.",
        "Place an accent shape in the bottom-left corner.",
        "Add a subtitle with supporting details below the title.",
        "Insert a small logo in the top-right corner.",
        "Add a call-to-action text at the bottom.",
        "Place a photo related to the theme on the right side.",
        "Add a footer with contact details at the very bottom.",
        "Balance the composition with a graphic element on the left.",
    ]
    steps.extend(fillers[: count - 1])
    return json.dumps({str(i + 1): s for i, s in enumerate(steps)})


@bench.command("gen")
@click.option("--themes", "theme_count", type=int, default=10, show_default=True)
@click.option("--themes-file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@_wrap
def bench_gen(theme_count: int, themes_file: str | None, out: str):
    """Generate a theme/instruction benchmark (offline client by default)."""
    if themes_file:
        lines = Path(themes_file).read_text(encoding="utf-8").splitlines()
        themes = [Theme(text=t.strip(), source="file") for t in lines if t.strip()]
    else:
        themes = [
            Theme(text=t, source="builtin")
            for t in (
                "Summer Beach Party Invitation",
                "Workplace Safety Poster",
                "Autumn Farmers Market Flyer",
                "Tech Conference Badge",
                "Charity Fun Run Banner",
                "Coffee Shop Loyalty Card",
                "Winter Holiday Sale Post",
                "Yoga Studio Schedule",
                "Science Fair Certificate",
                "Jazz Night Concert Poster",
                "Community Garden Newsletter",
                "Startup Pitch Deck Cover",
            )
        ]
    themes = dedup_themes(themes)[:theme_count]
    sequences = generate_for_themes(themes, _offline_instruction_client)
    write_benchmark(out, themes, sequences)
    accepted = sum(1 for v in sequences.values() if v is not None)
    click.echo(f"{accepted}/{len(themes)} themes accepted -> {out}")


@main.group(name="eval")
def eval_group():
    """Evaluation harness."""


@eval_group.command("run")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@_wrap
def eval_run(manifest: str):
    """Run a judged evaluation described by a manifest file."""
    from . import evalrunner

    report_path, table = evalrunner.run_manifest(Path(manifest))
    click.echo(table, nl=False)
    if report_path is not None:
        click.echo(f"report -> {report_path}")


if __name__ == "__main__":
    main()

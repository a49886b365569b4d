"""Evaluation protocol: Likert scoring, circular comparisons, and metrics.

Judged axes are theme adherence, aesthetic quality, and edit compliance.
Absolute mode asks for a single 1-5 rating per item; comparative mode asks
twice with the candidates' slots swapped and only credits a win when the
judge prefers the same underlying design both times (same slot twice is
position bias and counts as a tie). Geometry and text metrics are computed
locally; FID/CLIP-style model metrics are emitted as a manifest for external
tooling instead.
"""

from __future__ import annotations

import json
import re
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .canvas import BBox
from .errors import BackendError, ProtocolError, ValidationError
from .prompts import ABSOLUTE_BY_AXIS, COMPARATIVE_BY_AXIS, get_template

AXES = ("theme_adherence", "aesthetic_quality", "edit_compliance")

MODE_ABSOLUTE = "absolute"
MODE_COMPARATIVE = "comparative"

STATUS_OK = "ok"
STATUS_INVALID = "invalid"
STATUS_ERROR = "error"

_LIKERT_RE = re.compile(r"[1-5]")
_CHOICE_RE = re.compile(r"Image([1-4])")


@dataclass(frozen=True)
class EvalItem:
    """One thing to score: a design, or a before/after pair for edits."""

    item_id: str
    axis: str
    images: tuple[bytes, ...]
    theme: str | None = None
    instruction: str | None = None

    def validate(self) -> "EvalItem":
        if self.axis not in AXES:
            raise ValidationError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.axis == "theme_adherence" and (len(self.images) != 1 or not self.theme):
            raise ValidationError("theme_adherence needs one design image and a theme")
        if self.axis == "aesthetic_quality" and len(self.images) != 1:
            raise ValidationError("aesthetic_quality needs exactly one design image")
        if self.axis == "edit_compliance" and (
            len(self.images) != 2 or not self.instruction
        ):
            raise ValidationError(
                "edit_compliance needs (before, after) images and an instruction"
            )
        return self


@dataclass(frozen=True)
class ComparisonPair:
    """The same underlying item produced by two methods, A and B."""

    item_id: str
    axis: str
    a_images: tuple[bytes, ...]
    b_images: tuple[bytes, ...]
    theme: str | None = None
    instruction: str | None = None

    def validate(self) -> "ComparisonPair":
        per_side = 2 if self.axis == "edit_compliance" else 1
        if self.axis not in AXES:
            raise ValidationError(f"axis must be one of {AXES}, got {self.axis!r}")
        if len(self.a_images) != per_side or len(self.b_images) != per_side:
            raise ValidationError(
                f"{self.axis} comparison needs {per_side} image(s) per side"
            )
        if self.axis == "theme_adherence" and not self.theme:
            raise ValidationError("theme_adherence comparison needs a theme")
        if self.axis == "edit_compliance" and not self.instruction:
            raise ValidationError("edit_compliance comparison needs an instruction")
        return self


@dataclass(frozen=True)
class EvalVerdict:
    """Outcome of judging one item or pair."""

    mode: str
    status: str
    likert: int | None = None
    choice: str | None = None
    ambiguous: bool = False
    detail: str | None = None

    def validate(self) -> "EvalVerdict":
        if self.mode not in (MODE_ABSOLUTE, MODE_COMPARATIVE):
            raise ValidationError(f"bad verdict mode {self.mode!r}")
        if self.likert is not None and (
            self.mode != MODE_ABSOLUTE or not 1 <= self.likert <= 5
        ):
            raise ValidationError("likert must be 1..5 and absolute-mode only")
        if self.choice is not None and (
            self.mode != MODE_COMPARATIVE or self.choice not in ("a", "b", "tie")
        ):
            raise ValidationError("choice must be a/b/tie and comparative-mode only")
        return self


def parse_likert(reply: str) -> int | None:
    """Strict single-digit parse; anything beyond one 1-5 digit is None."""
    text = reply.strip()
    if _LIKERT_RE.fullmatch(text):
        return int(text)
    return None


def parse_choice(reply: str, image_count: int) -> tuple[str, bool] | None:
    """Strict ImageN parse, mapped to ('first'|'second', ambiguous).

    Four-image templates nominally allow only Image1 or Image3, but judges
    answer Image2/Image4 too; those map to the same sides with the ambiguity
    flagged so reports can surface it.
    """
    match = _CHOICE_RE.fullmatch(reply.strip())
    if not match:
        return None
    n = int(match.group(1))
    if image_count == 4:
        side = "first" if n in (1, 2) else "second"
        return side, n in (2, 4)
    if n == 1:
        return "first", False
    if n == 2:
        return "second", False
    return None


def _substitutions(axis: str, theme: str | None, instruction: str | None) -> dict:
    if axis == "theme_adherence":
        return {"theme": theme}
    if axis == "edit_compliance":
        return {"instruction": instruction}
    return {}


def score_absolute(item: EvalItem, judge) -> EvalVerdict:
    """One Likert rating; unparsable reply retried once, then invalid."""
    item.validate()
    template = get_template(ABSOLUTE_BY_AXIS[item.axis])
    text = template.fill(_substitutions(item.axis, item.theme, item.instruction))
    last = ""
    try:
        for _ in range(2):
            last = judge.ask(template.id, text, item.images)
            likert = parse_likert(last)
            if likert is not None:
                return EvalVerdict(
                    mode=MODE_ABSOLUTE, status=STATUS_OK, likert=likert
                ).validate()
    except (BackendError, ProtocolError) as exc:
        return EvalVerdict(mode=MODE_ABSOLUTE, status=STATUS_ERROR, detail=str(exc))
    return EvalVerdict(
        mode=MODE_ABSOLUTE,
        status=STATUS_INVALID,
        detail=f"unparsable judge reply: {last[:80]!r}",
    )


def _ask_choice(judge, template, text, images) -> tuple[str, bool] | None:
    for _ in range(2):
        reply = judge.ask(template.id, text, images)
        parsed = parse_choice(reply, len(images))
        if parsed is not None:
            return parsed
    return None


def compare_circular(pair: ComparisonPair, judge) -> EvalVerdict:
    """Two passes with slots swapped; a win needs content-consistent picks.

    Pass 1 shows (A, B), pass 2 shows (B, A); for edit compliance the slots
    hold (before, after) pairs. Picking the same design both times yields a
    or b; picking the same slot both times yields tie; an unparsable pass
    (after one retry) invalidates the pair.
    """
    pair.validate()
    template = get_template(COMPARATIVE_BY_AXIS[pair.axis])
    text = template.fill(_substitutions(pair.axis, pair.theme, pair.instruction))
    pass1 = pair.a_images + pair.b_images
    pass2 = pair.b_images + pair.a_images
    try:
        first = _ask_choice(judge, template, text, pass1)
        second = _ask_choice(judge, template, text, pass2)
    except (BackendError, ProtocolError) as exc:
        return EvalVerdict(mode=MODE_COMPARATIVE, status=STATUS_ERROR, detail=str(exc))
    if first is None or second is None:
        return EvalVerdict(
            mode=MODE_COMPARATIVE,
            status=STATUS_INVALID,
            detail="unparsable judge reply in a circular pass",
        )
    content1 = "a" if first[0] == "first" else "b"
    content2 = "b" if second[0] == "first" else "a"
    choice = content1 if content1 == content2 else "tie"
    return EvalVerdict(
        mode=MODE_COMPARATIVE,
        status=STATUS_OK,
        choice=choice,
        ambiguous=first[1] or second[1],
    ).validate()


def run_absolute(
    items: list[EvalItem], judge, max_in_flight: int = 1
) -> list[tuple[str, EvalVerdict]]:
    """Judge every item; errors mark items, never abort the run."""
    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        verdicts = list(pool.map(lambda item: score_absolute(item, judge), items))
    return [(item.item_id, v) for item, v in zip(items, verdicts)]


def run_comparative(
    pairs: list[ComparisonPair], judge, max_in_flight: int = 1
) -> list[tuple[str, EvalVerdict]]:
    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        verdicts = list(pool.map(lambda pair: compare_circular(pair, judge), pairs))
    return [(pair.item_id, v) for pair, v in zip(pairs, verdicts)]


# --- metrics ---


def bbox_iou(a: BBox, b: BBox) -> float:
    inter = a.intersection_area(b)
    union = a.area + b.area - inter
    return inter / union if union else 0.0


def greedy_bbox_matching(
    predicted: list[BBox], reference: list[BBox]
) -> list[tuple[int, int, float]]:
    """One-to-one (pred, ref, iou) matches, taken in descending IoU order.

    Zero-IoU pairs never match. Ties break on (pred index, ref index), so
    the matching is deterministic.
    """
    pairs = sorted(
        (
            (-bbox_iou(p, r), i, j)
            for i, p in enumerate(predicted)
            for j, r in enumerate(reference)
        ),
    )
    used_pred: set[int] = set()
    used_ref: set[int] = set()
    matches = []
    for neg_iou, i, j in pairs:
        if neg_iou == 0.0:
            break
        if i in used_pred or j in used_ref:
            continue
        used_pred.add(i)
        used_ref.add(j)
        matches.append((i, j, -neg_iou))
    return matches


def text_iou(predicted: list[BBox], reference: list[BBox]) -> float:
    """Mean matched IoU over reference boxes; unmatched references score 0."""
    if not reference:
        return 1.0 if not predicted else 0.0
    matches = greedy_bbox_matching(predicted, reference)
    return sum(m[2] for m in matches) / len(reference)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[len(b)]


def string_similarity(a: str, b: str) -> float:
    """Normalized Levenshtein similarity: 1 - distance / max length."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def _cosine(u: list[float], v: list[float]) -> float:
    dot = sum(x * y for x, y in zip(u, v))
    nu = sum(x * x for x in u) ** 0.5
    nv = sum(y * y for y in v) ** 0.5
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def text_accuracy(
    predicted: list[str],
    reference: list[str],
    embedder=None,
    warnings: list[str] | None = None,
) -> float:
    """Mean pairwise text similarity over index-aligned pairs.

    The lists arrive already aligned by the caller's bbox matching. With an
    embedder (strings -> vectors) the score is mean cosine similarity;
    without one, mean normalized Levenshtein similarity. Reference entries
    with no prediction score 0; a reply longer than the reference is not
    rewarded for the excess.
    """
    if not reference:
        return 1.0 if not predicted else 0.0
    paired = list(zip(predicted, reference))
    if embedder is not None:
        try:
            texts = [t for pair in paired for t in pair]
            vectors = embedder(texts)
            sims = [
                _cosine(vectors[2 * i], vectors[2 * i + 1]) for i in range(len(paired))
            ]
            return sum(sims) / len(reference)
        except Exception as exc:
            message = f"embedder failed ({exc}); falling back to string similarity"
            if warnings is not None:
                warnings.append(message)
    return sum(string_similarity(p, r) for p, r in paired) / len(reference)


# --- aggregation and reporting ---


def summarize_absolute(verdicts: list[EvalVerdict]) -> dict:
    """Population mean/std over valid Likert scores, plus exclusion counts."""
    scores = [v.likert for v in verdicts if v.status == STATUS_OK]
    summary = {
        "count": len(scores),
        "invalid": sum(1 for v in verdicts if v.status == STATUS_INVALID),
        "errored": sum(1 for v in verdicts if v.status == STATUS_ERROR),
        "scores": scores,
    }
    if scores:
        summary["mean"] = statistics.fmean(scores)
        summary["std"] = statistics.pstdev(scores)
    else:
        summary["mean"] = None
        summary["std"] = None
    return summary


def summarize_comparative(verdicts: list[EvalVerdict]) -> dict:
    return {
        "a": sum(1 for v in verdicts if v.status == STATUS_OK and v.choice == "a"),
        "b": sum(1 for v in verdicts if v.status == STATUS_OK and v.choice == "b"),
        "tie": sum(1 for v in verdicts if v.status == STATUS_OK and v.choice == "tie"),
        "invalid": sum(1 for v in verdicts if v.status == STATUS_INVALID),
        "errored": sum(1 for v in verdicts if v.status == STATUS_ERROR),
        "ambiguous": sum(1 for v in verdicts if v.ambiguous),
    }


def build_manifest(
    methods: list[str],
    item_ids: list[str],
    template_ids: list[str],
    judge_ref: str,
    seed: int = 0,
) -> dict:
    """Everything needed to reproduce a run byte-identically."""
    templates = {tid: get_template(tid).sha256 for tid in sorted(set(template_ids))}
    return {
        "methods": sorted(methods),
        "items": list(item_ids),
        "templates": templates,
        "judge": judge_ref,
        "seed": seed,
    }


def report_json(manifest: dict, sections: dict) -> bytes:
    """Canonical report bytes: sorted keys, 2-space indent, trailing LF."""
    return (
        json.dumps(
            {"manifest": manifest, **sections},
            indent=2,
            sort_keys=True,
            ensure_ascii=False,
        )
        + "\n"
    ).encode("utf-8")


def format_table(rows: list[dict], columns: list[str]) -> str:
    """Fixed-width plain-text table; floats render with 4 decimals."""

    def cell(value) -> str:
        if value is None:
            return "-"
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)

    grid = [columns] + [[cell(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(line[i]) for line in grid) for i in range(len(columns))]
    lines = []
    for line in grid:
        lines.append("  ".join(text.ljust(widths[i]) for i, text in enumerate(line)).rstrip())
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def emit_external_metrics_manifest(
    out_path: str | Path,
    image_sets: dict[str, list[str]],
    config: dict | None = None,
) -> Path:
    """Describe an FID/CLIP-style job for external tooling; nothing is computed."""
    payload = {
        "kind": "external-metrics",
        "metrics": ["fid", "clip_aesthetic"],
        "image_sets": {name: sorted(paths) for name, paths in image_sets.items()},
        "config": config or {},
    }
    path = Path(out_path)
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return path

"""Manifest-driven evaluation runs for `sledge eval run`.

A manifest is a JSON file describing the judge (scripted fixtures or a
remote endpoint), the items to score, and where to write the report. Image
paths are resolved relative to the manifest file, and the emitted report is
byte-reproducible for a given manifest and fixture set.

Manifest shape:

    {
      "judge": {"kind": "scripted", "fixtures": [
          {"template_id": "...", "images": ["a.png"], "replies": ["4"]}]},
      "seed": 0,
      "absolute": [{"item_id": "...", "method": "...", "axis": "...",
                    "images": ["design.png"], "theme": null, "instruction": null}],
      "comparative": [{"item_id": "...", "axis": "...", "methods": ["x", "y"],
                       "a_images": [...], "b_images": [...],
                       "theme": null, "instruction": null}],
      "out": "report.json"
    }

Scripted fixtures may give attachment "images" (hashed at load) or
precomputed "digests".
"""

from __future__ import annotations

import json
from pathlib import Path

from .backends import RemoteJudge, ScriptedJudge, attachment_digest
from .errors import ValidationError
from .evalharness import (
    ComparisonPair,
    EvalItem,
    EvalVerdict,
    build_manifest,
    format_table,
    report_json,
    run_absolute,
    run_comparative,
    summarize_absolute,
    summarize_comparative,
)
from .prompts import ABSOLUTE_BY_AXIS, COMPARATIVE_BY_AXIS


def _read_images(base: Path, paths: list[str]) -> tuple[bytes, ...]:
    return tuple((base / p).read_bytes() for p in paths)


def _build_judge(spec: dict, base: Path):
    kind = spec.get("kind")
    if kind == "scripted":
        judge = ScriptedJudge()
        for fixture in spec.get("fixtures", []):
            if "digests" in fixture:
                digests = tuple(fixture["digests"])
            else:
                digests = attachment_digest(_read_images(base, fixture["images"]))
            judge.add_digests(fixture["template_id"], digests, fixture["replies"])
        return judge, "scripted"
    if kind == "remote":
        url = spec.get("url")
        if not url:
            raise ValidationError("remote judge needs a url")
        return RemoteJudge(url, api_key=spec.get("api_key")), url
    raise ValidationError(f"judge kind must be scripted or remote, got {kind!r}")


def run_manifest(path: Path) -> tuple[Path | None, str]:
    """Execute one manifest; returns (report path or None, rendered table)."""
    base = path.parent
    spec = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(spec, dict) or "judge" not in spec:
        raise ValidationError("manifest must be a JSON object with a judge entry")
    judge, judge_ref = _build_judge(spec["judge"], base)
    seed = spec.get("seed", 0)

    methods: set[str] = set()
    item_ids: list[str] = []
    template_ids: list[str] = []

    absolute_specs = spec.get("absolute", [])
    absolute_items: list[tuple[str, EvalItem]] = []
    for obj in absolute_specs:
        item = EvalItem(
            item_id=obj["item_id"],
            axis=obj["axis"],
            images=_read_images(base, obj["images"]),
            theme=obj.get("theme"),
            instruction=obj.get("instruction"),
        ).validate()
        method = obj.get("method", "default")
        methods.add(method)
        item_ids.append(item.item_id)
        template_ids.append(ABSOLUTE_BY_AXIS[item.axis])
        absolute_items.append((method, item))

    comparative_specs = spec.get("comparative", [])
    pairs: list[ComparisonPair] = []
    pair_methods: list[tuple[str, str]] = []
    for obj in comparative_specs:
        pair = ComparisonPair(
            item_id=obj["item_id"],
            axis=obj["axis"],
            a_images=_read_images(base, obj["a_images"]),
            b_images=_read_images(base, obj["b_images"]),
            theme=obj.get("theme"),
            instruction=obj.get("instruction"),
        ).validate()
        names = obj.get("methods", ["a", "b"])
        methods.update(names)
        item_ids.append(pair.item_id)
        template_ids.append(COMPARATIVE_BY_AXIS[pair.axis])
        pairs.append(pair)
        pair_methods.append(tuple(names))

    run_results = run_absolute([item for _, item in absolute_items], judge)
    comparative_verdicts = run_comparative(pairs, judge)

    absolute_section: dict = {}
    grouped: dict[tuple[str, str], list[EvalVerdict]] = {}
    for (method, item), (_, verdict) in zip(absolute_items, run_results):
        bucket = absolute_section.setdefault(method, {}).setdefault(
            item.axis, {"items": []}
        )
        bucket["items"].append(
            {
                "item_id": item.item_id,
                "status": verdict.status,
                "likert": verdict.likert,
                "detail": verdict.detail,
            }
        )
        grouped.setdefault((method, item.axis), []).append(verdict)
    rows = []
    for method, axis in sorted(grouped):
        bucket = absolute_section[method][axis]
        bucket.update(summarize_absolute(grouped[(method, axis)]))
        rows.append(
            {
                "method": method,
                "axis": axis,
                "mean": bucket["mean"],
                "std": bucket["std"],
                "n": bucket["count"],
                "invalid": bucket["invalid"],
                "errored": bucket["errored"],
            }
        )
    table_parts = []
    if rows:
        table_parts.append(
            format_table(rows, ["method", "axis", "mean", "std", "n", "invalid", "errored"])
        )

    comparative_section: dict = {}
    for pair, names, (item_id, verdict) in zip(pairs, pair_methods, comparative_verdicts):
        bucket = comparative_section.setdefault(pair.axis, {"items": []})
        bucket["items"].append(
            {
                "item_id": item_id,
                "methods": list(names),
                "status": verdict.status,
                "choice": verdict.choice,
                "ambiguous": verdict.ambiguous,
                "detail": verdict.detail,
            }
        )
    comp_rows = []
    for axis in sorted(comparative_section):
        bucket = comparative_section[axis]
        axis_verdicts = [
            v for pair, (_, v) in zip(pairs, comparative_verdicts) if pair.axis == axis
        ]
        bucket.update(summarize_comparative(axis_verdicts))
        comp_rows.append({"axis": axis, **{k: bucket[k] for k in
                          ("a", "b", "tie", "invalid", "errored", "ambiguous")}})
    if comp_rows:
        table_parts.append(
            format_table(
                comp_rows, ["axis", "a", "b", "tie", "invalid", "errored", "ambiguous"]
            )
        )

    manifest_obj = build_manifest(
        sorted(methods), item_ids, template_ids, judge_ref, seed
    )
    report = report_json(
        manifest_obj,
        {"absolute": absolute_section, "comparative": comparative_section},
    )
    out_path = None
    if spec.get("out"):
        out_path = base / spec["out"]
        out_path.write_bytes(report)
    table = "".join(table_parts) if table_parts else "no items evaluated\n"
    return out_path, table

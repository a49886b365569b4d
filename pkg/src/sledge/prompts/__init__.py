"""Versioned prompt templates, loaded verbatim from packaged text files.

Every model-facing prompt lives here as a file, never as an inline string,
and each template is content-addressed by the sha256 of its text so that
evaluation reports pin the exact prompt wording they ran with. Placeholders
use angle brackets (<theme>, <instruction>, <instructions>) and each must
appear exactly once in its template.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import ValidationError

PROMPTS_DIR = Path(__file__).parent

_PLACEHOLDER_RE = re.compile(r"<(theme|instruction|instructions)>")

# id -> (image attachment arity, placeholder names)
_TEMPLATE_SPECS: dict[str, tuple[int, frozenset[str]]] = {
    "benchmark-generation": (0, frozenset({"theme"})),
    "instruction-filtering": (0, frozenset({"instructions"})),
    "theme-adherence-absolute": (1, frozenset({"theme"})),
    "aesthetic-quality-absolute": (1, frozenset()),
    "edit-compliance-absolute": (2, frozenset({"instruction"})),
    "theme-adherence-comparative": (2, frozenset({"theme"})),
    "aesthetic-quality-comparative": (2, frozenset()),
    "edit-compliance-comparative": (4, frozenset({"instruction"})),
}

ABSOLUTE_BY_AXIS = {
    "theme_adherence": "theme-adherence-absolute",
    "aesthetic_quality": "aesthetic-quality-absolute",
    "edit_compliance": "edit-compliance-absolute",
}

COMPARATIVE_BY_AXIS = {
    "theme_adherence": "theme-adherence-comparative",
    "aesthetic_quality": "aesthetic-quality-comparative",
    "edit_compliance": "edit-compliance-comparative",
}


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    text: str
    sha256: str
    image_arity: int
    placeholders: frozenset[str]

    def fill(self, substitutions: dict[str, str] | None = None) -> str:
        """Substitute every placeholder; wrong or missing keys are errors."""
        substitutions = substitutions or {}
        keys = frozenset(substitutions)
        if keys != self.placeholders:
            raise ValidationError(
                f"template {self.id!r} needs substitutions "
                f"{sorted(self.placeholders)}, got {sorted(keys)}"
            )
        text = self.text
        for name, value in substitutions.items():
            if not isinstance(value, str):
                raise ValidationError(f"substitution {name!r} must be a string")
            text = text.replace(f"<{name}>", value)
        return text


def _load_template(template_id: str) -> PromptTemplate:
    path = PROMPTS_DIR / f"{template_id}.txt"
    if not path.is_file():
        raise ValidationError(f"missing prompt template file: {path}")
    # files carry one trailing LF that is not part of the prompt
    text = path.read_text(encoding="utf-8")
    if text.endswith("\n"):
        text = text[:-1]
    arity, placeholders = _TEMPLATE_SPECS[template_id]
    found = _PLACEHOLDER_RE.findall(text)
    if sorted(found) != sorted(placeholders):
        raise ValidationError(
            f"template {template_id!r} must contain each of "
            f"{sorted(placeholders)} exactly once, found {found}"
        )
    return PromptTemplate(
        id=template_id,
        text=text,
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        image_arity=arity,
        placeholders=placeholders,
    )


_cache: dict[str, PromptTemplate] | None = None


def registry() -> dict[str, PromptTemplate]:
    """All templates by id; loaded once, validated for completeness."""
    global _cache
    if _cache is None:
        _cache = {tid: _load_template(tid) for tid in _TEMPLATE_SPECS}
    return _cache


def get_template(template_id: str) -> PromptTemplate:
    templates = registry()
    if template_id not in templates:
        raise ValidationError(
            f"unknown template {template_id!r}; known: {sorted(templates)}"
        )
    return templates[template_id]


def fill_template(template_id: str, substitutions: dict[str, str] | None = None) -> str:
    return get_template(template_id).fill(substitutions)

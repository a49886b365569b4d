"""Shared backend types: generator requests and the backend protocols."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Protocol, TypeVar, runtime_checkable

from ..canvas import Canvas
from ..compositor import Mask
from ..errors import ValidationError
from ..metadata import GeneratorReply

log = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class GeneratorRequest:
    """One step request: what to add, onto which canvas state."""

    instruction: str
    canvas: Canvas
    seed: int = 0
    asset: Canvas | None = None

    def validate(self) -> "GeneratorRequest":
        if not isinstance(self.instruction, str) or not self.instruction.strip():
            raise ValidationError("instruction must be a non-empty string")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        return self


@runtime_checkable
class Generator(Protocol):
    def generate(self, request: GeneratorRequest) -> GeneratorReply: ...


@runtime_checkable
class Refiner(Protocol):
    def refine(self, base: Canvas, edited: Canvas, reference: Mask) -> tuple[Mask, ...]:
        """Propose candidate masks for the changed region; () defers to the reference."""
        ...


@runtime_checkable
class Judge(Protocol):
    def ask(self, template_id: str, text: str, images: tuple[bytes, ...]) -> str:
        """Send one filled prompt with PNG attachments, return the raw reply text."""
        ...


def call_with_retries(
    fn: Callable[[], T],
    retryable: tuple[type[BaseException], ...],
    attempts: int = 3,
    base_delay: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Run ``fn`` up to ``attempts`` times with exponential backoff.

    Only exceptions in ``retryable`` trigger a retry; the last one is re-raised.
    """
    if attempts < 1:
        raise ValueError("attempts must be at least 1")
    delay = base_delay
    for attempt in range(attempts):
        try:
            return fn()
        except retryable as exc:
            if attempt == attempts - 1:
                raise
            log.warning(
                "backend call failed (attempt %d/%d): %s", attempt + 1, attempts, exc
            )
            sleep(delay)
            delay *= 2
    raise AssertionError("unreachable")

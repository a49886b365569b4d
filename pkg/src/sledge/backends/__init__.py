"""Pluggable backends: generators, mask refiners, and judges."""

from __future__ import annotations

import os

from ..errors import ValidationError
from .base import Generator, GeneratorRequest, Judge, Refiner, call_with_retries
from .judge import RemoteJudge, ScriptedJudge, attachment_digest
from .mock import MockGenerator
from .refiner import ConnectedComponentRefiner, NullRefiner, RemoteRefiner
from .remote import RemoteGenerator

BACKEND_ENV = "SLEDGE_BACKEND"
GENERATOR_URL_ENV = "SLEDGE_GENERATOR_URL"
REFINER_URL_ENV = "SLEDGE_REFINER_URL"
JUDGE_URL_ENV = "SLEDGE_JUDGE_URL"
JUDGE_API_KEY_ENV = "SLEDGE_JUDGE_API_KEY"


def generator_from_env(env=None) -> Generator:
    """Build the generator named by SLEDGE_BACKEND (mock unless told otherwise)."""
    env = os.environ if env is None else env
    backend = env.get(BACKEND_ENV, "mock").strip().lower()
    if backend == "mock":
        return MockGenerator()
    if backend == "remote":
        url = env.get(GENERATOR_URL_ENV, "").strip()
        if not url:
            raise ValidationError(
                f"{BACKEND_ENV}=remote requires {GENERATOR_URL_ENV} to be set"
            )
        return RemoteGenerator(url)
    raise ValidationError(
        f"{BACKEND_ENV} must be 'mock' or 'remote', got {backend!r}"
    )


def refiner_from_env(env=None) -> Refiner:
    """Remote refiner when SLEDGE_REFINER_URL is set, else the null refiner.

    Without an external service the bbox-union mask is already exact for
    mock-generated layers, so the default proposes nothing and lets the
    selection fallback keep it. ConnectedComponentRefiner is the opt-in
    deterministic alternative.
    """
    env = os.environ if env is None else env
    url = env.get(REFINER_URL_ENV, "").strip()
    if url:
        return RemoteRefiner(url)
    return NullRefiner()


def judge_from_env(env=None) -> Judge:
    env = os.environ if env is None else env
    url = env.get(JUDGE_URL_ENV, "").strip()
    if not url:
        raise ValidationError(f"a judge backend requires {JUDGE_URL_ENV} to be set")
    return RemoteJudge(url, api_key=env.get(JUDGE_API_KEY_ENV) or None)


__all__ = [
    "Generator",
    "GeneratorRequest",
    "Judge",
    "Refiner",
    "MockGenerator",
    "RemoteGenerator",
    "NullRefiner",
    "ConnectedComponentRefiner",
    "RemoteRefiner",
    "ScriptedJudge",
    "RemoteJudge",
    "attachment_digest",
    "call_with_retries",
    "generator_from_env",
    "refiner_from_env",
    "judge_from_env",
]

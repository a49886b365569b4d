"""Judge backends: answer filled prompt templates about attached images.

Judges are intentionally dumb transports: they return the raw reply text and
leave parsing (score extraction, retry-on-garbage) to the evaluation
harness. ScriptedJudge replays canned replies for offline tests; RemoteJudge
talks to an HTTP endpoint.
"""

from __future__ import annotations

import base64
import hashlib
import logging

from ..errors import BackendError, FixtureError, ProtocolError
from .base import call_with_retries

log = logging.getLogger(__name__)


def attachment_digest(images: tuple[bytes, ...]) -> tuple[str, ...]:
    return tuple(hashlib.sha256(img).hexdigest() for img in images)


class ScriptedJudge:
    """Replays fixture replies keyed by (template_id, attachment digests).

    Each fixture holds a list of replies consumed in call order, so a retry
    after an unparseable first reply sees the next one. The final reply is
    sticky: once the list is down to one entry, further calls keep returning
    it. An unknown key raises FixtureError rather than guessing.
    """

    def __init__(self):
        self._fixtures: dict[tuple[str, tuple[str, ...]], list[str]] = {}
        self.calls: list[tuple[str, tuple[str, ...]]] = []

    def add(
        self, template_id: str, images: tuple[bytes, ...], replies: list[str] | str
    ) -> "ScriptedJudge":
        return self.add_digests(template_id, attachment_digest(images), replies)

    def add_digests(
        self,
        template_id: str,
        digests: tuple[str, ...],
        replies: list[str] | str,
    ) -> "ScriptedJudge":
        if isinstance(replies, str):
            replies = [replies]
        if not replies:
            raise FixtureError("a fixture needs at least one reply")
        self._fixtures[(template_id, tuple(digests))] = list(replies)
        return self

    def ask(self, template_id: str, text: str, images: tuple[bytes, ...]) -> str:
        key = (template_id, attachment_digest(images))
        self.calls.append(key)
        queue = self._fixtures.get(key)
        if queue is None:
            raise FixtureError(
                f"no scripted reply for template {template_id!r} with "
                f"{len(images)} attachment(s)"
            )
        if len(queue) > 1:
            return queue.pop(0)
        return queue[0]


class RemoteJudge:
    """POSTs {template_id, text, images} JSON to ``{url}/v1/judge``.

    Images travel base64-encoded; the endpoint answers ``{"text": "..."}``.
    Transport errors and 5xx responses are retried with exponential backoff;
    4xx responses fail immediately.
    """

    def __init__(
        self,
        url: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        client=None,
    ):
        import httpx

        self.url = url.rstrip("/")
        self.api_key = api_key
        self.retries = retries
        self._httpx = httpx
        self._client = client or httpx.Client(timeout=timeout)

    def ask(self, template_id: str, text: str, images: tuple[bytes, ...]) -> str:
        payload = {
            "template_id": template_id,
            "text": text,
            "images": [base64.b64encode(img).decode("ascii") for img in images],
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        def call() -> str:
            response = self._client.post(
                f"{self.url}/v1/judge", json=payload, headers=headers
            )
            if response.status_code >= 500:
                raise ProtocolError(f"judge returned {response.status_code}")
            if response.status_code >= 400:
                raise BackendError(
                    f"judge rejected the request: {response.status_code} {response.text[:200]}"
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise ProtocolError(f"judge reply is not JSON: {exc}") from exc
            if not isinstance(body, dict) or not isinstance(body.get("text"), str):
                raise ProtocolError('judge reply must be {"text": "..."}')
            return body["text"]

        return call_with_retries(
            call,
            retryable=(self._httpx.TransportError, ProtocolError),
            attempts=self.retries + 1,
        )

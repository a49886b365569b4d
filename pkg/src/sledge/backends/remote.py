"""HTTP generator client speaking the multipart step protocol."""

from __future__ import annotations

import logging

from ..canvas import encode_png
from ..errors import BackendError, ParseError, ProtocolError
from ..metadata import GeneratorReply, parse_reply
from .base import GeneratorRequest, call_with_retries

log = logging.getLogger(__name__)


class RemoteGenerator:
    """POSTs a step request to ``{url}/v1/generate`` and parses the raw reply.

    The request is multipart form data: ``instruction`` and ``seed`` text
    fields, the current canvas as a ``canvas`` PNG file, and an optional
    ``asset`` PNG file. The response body is the wire reply itself (strict
    JSON header plus optional framed payload). Transport errors and 5xx are
    retried with exponential backoff; 4xx and malformed replies are not.
    """

    def __init__(
        self,
        url: str,
        timeout: float = 30.0,
        retries: int = 2,
        client=None,
    ):
        import httpx

        self.url = url.rstrip("/")
        self.retries = retries
        self._httpx = httpx
        self._client = client or httpx.Client(timeout=timeout)

    def generate(self, request: GeneratorRequest) -> GeneratorReply:
        request.validate()
        data = {
            "instruction": request.instruction,
            "seed": str(request.seed),
        }
        files = {
            "canvas": ("canvas.png", encode_png(request.canvas.array), "image/png"),
        }
        if request.asset is not None:
            files["asset"] = ("asset.png", encode_png(request.asset.array), "image/png")

        def call() -> bytes:
            response = self._client.post(
                f"{self.url}/v1/generate", data=data, files=files
            )
            if response.status_code >= 500:
                raise ProtocolError(f"generator returned {response.status_code}")
            if response.status_code >= 400:
                raise BackendError(
                    f"generator rejected the request: "
                    f"{response.status_code} {response.text[:200]}"
                )
            return response.content

        raw = call_with_retries(
            call,
            retryable=(self._httpx.TransportError, ProtocolError),
            attempts=self.retries + 1,
        )
        try:
            return parse_reply(raw)
        except ParseError as exc:
            raise ProtocolError(f"generator reply is malformed: {exc}") from exc

"""Exception hierarchy shared across the engine.

Every error carries a stable ``code`` string so the HTTP service and CLI can
map failures to wire-level error bodies and exit codes without string
matching on messages.
"""

from __future__ import annotations


class SledgeError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def __init__(self, message: str, *, details: object = None):
        super().__init__(message)
        self.details = details


class ValidationError(SledgeError):
    """Input violates a documented precondition or invariant."""

    code = "validation_error"


class InvalidDimensionError(ValidationError):
    code = "invalid_dimension"


class RangeError(ValidationError):
    code = "range_error"


class WrongKindError(ValidationError):
    """Operation targets an element of the wrong kind (text vs image)."""

    code = "wrong_kind"


class CorruptDocumentError(SledgeError):
    """Persisted or in-memory document fails structural checks."""

    code = "corrupt_document"


class DimensionMismatchError(ValidationError):
    code = "dimension_mismatch"


class EmptyRegionError(ValidationError):
    """A step's image mask would be empty (no bboxes)."""

    code = "empty_region"


class ParseError(SledgeError):
    """Malformed generator reply; ``offset`` is the byte position if known."""

    code = "parse_error"

    def __init__(self, message: str, *, offset: int | None = None, details: object = None):
        super().__init__(message, details=details)
        self.offset = offset


class SentinelError(ParseError):
    code = "sentinel_error"


class SemanticError(ParseError):
    """Reply parsed but violates element semantics; names the element index."""

    code = "semantic_error"

    def __init__(self, message: str, *, element_index: int | None = None):
        super().__init__(message)
        self.element_index = element_index


class BackendError(SledgeError):
    """Transport-level backend failure; retryable by the caller."""

    code = "backend_error"


class ProtocolError(SledgeError):
    """Backend replied, but the reply violates the wire contract."""

    code = "protocol_error"


class FixtureError(SledgeError):
    """Scripted backend has no fixture entry for the query."""

    code = "fixture_error"


class GenerationError(SledgeError):
    """Instruction generation failed for a theme after retry."""

    code = "generation_error"

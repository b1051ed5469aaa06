"""Exception hierarchy for the memory engine.

Every error raised by the package derives from SceneMemError so callers
(CLI, HTTP service) can map failures to exit codes / status codes in one
place. Parse and validation failures carry enough context to name the
offending turn, view, or scene.
"""

from __future__ import annotations


class SceneMemError(Exception):
    """Base class for all engine errors."""


class CorpusParseError(SceneMemError):
    """Malformed corpus input; message names the offending session/turn/field."""


class ConfigError(SceneMemError):
    """Invalid or unknown engine configuration."""


class ProviderError(SceneMemError):
    """A language-model or embedding provider failed.

    ``retryable`` distinguishes transient transport failures from permanent
    ones (e.g. an unparseable response after retries).
    """

    def __init__(self, message: str, *, retryable: bool = False, item_id: str | None = None):
        super().__init__(message)
        self.retryable = retryable
        self.item_id = item_id


class ProviderParseError(ProviderError):
    """Provider returned output that does not fit the expected shape."""

    def __init__(self, message: str, *, item_id: str | None = None):
        super().__init__(message, retryable=False, item_id=item_id)


class AnnotationError(SceneMemError):
    """A view is missing annotations required by a downstream stage."""


class IndexStateError(SceneMemError):
    """Inconsistent index state (duplicate ids, unknown scene, ...)."""


class PersistenceError(SceneMemError):
    """On-disk container cannot be written or loaded."""


class VersionMismatchError(PersistenceError):
    """Container format version differs from what this build understands."""

    def __init__(self, found: int, expected: int):
        super().__init__(
            f"index container has format version {found}, this build expects {expected}; "
            "rebuild the index"
        )
        self.found = found
        self.expected = expected


class DimensionMismatchError(PersistenceError):
    """Container embeddings do not match the configured embedder dimension."""

    def __init__(self, found: int, expected: int):
        super().__init__(
            f"index container was built with embedding dimension {found}, "
            f"configured embedder has dimension {expected}"
        )
        self.found = found
        self.expected = expected


class LockError(PersistenceError):
    """Another writer holds the index directory lock."""

"""Capability interfaces for language-model and embedding providers.

Every model-dependent step in the pipeline goes through these two
protocols, so the whole engine runs against the deterministic reference
provider in tests and against an HTTP-backed model in production. Each
capability is total on non-empty input or raises a typed ProviderError.
"""

from __future__ import annotations

from typing import NamedTuple, Protocol, runtime_checkable

JUDGE_LABELS = ("CORRECT", "WRONG")


class Triple(NamedTuple):
    """A (subject, predicate, object) fact extracted from a passage."""

    subject: str
    predicate: str
    object: str


@runtime_checkable
class AnnotationProvider(Protocol):
    """Text-understanding capabilities backed by a language model."""

    def extract_participants(self, text: str) -> set[str]:
        """Person names mentioned in the text (raw, un-normalized)."""
        ...

    def extract_topic(self, text: str) -> str:
        """A short topic phrase for the text."""
        ...

    def summarize_scene(self, texts: list[str]) -> str:
        """Summary of the member view texts of one scene, in order."""
        ...

    def extract_triples(self, passage: str) -> list[Triple]:
        """Open relation triples found in the passage."""
        ...

    def generate_answer(self, prompt: str) -> str:
        """Answer the fully assembled generation prompt."""
        ...

    def judge(self, prompt: str) -> str:
        """Return exactly 'CORRECT' or 'WRONG' for a judge prompt."""
        ...


@runtime_checkable
class EmbeddingProvider(Protocol):
    """Fixed-dimension text embedder."""

    @property
    def dimension(self) -> int:
        ...

    def embed(self, text: str) -> tuple[float, ...]:
        """Finite-valued vector of exactly ``dimension`` entries."""
        ...

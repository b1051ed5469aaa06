"""Annotation stage: fill participants, topic, and topic vector on views.

Speakers of the member messages are always injected into the participant
set by the engine itself; the provider only adds mentioned non-speakers.
Role assignment downstream depends on speakers being present, so this is
enforced here rather than trusted to any provider.

``participant_mode="speakers"`` is the ablation that skips mention
replication: participants become the member speakers only.
"""

from __future__ import annotations

from .dialogue import normalize_name
from .errors import AnnotationError, ProviderError
from .providers.base import AnnotationProvider, EmbeddingProvider
from .views import View

PARTICIPANT_MODES = ("mentions", "speakers")


def extract_participants(provider: AnnotationProvider, view: View) -> frozenset[str]:
    """Normalized participant set of a view: provider mentions plus speakers."""
    if not view.text.strip():
        raise AnnotationError(f"view {view.id} has no text")
    try:
        raw = provider.extract_participants(view.text)
    except ProviderError as exc:
        exc.item_id = exc.item_id or view.id
        raise
    names = {normalize_name(n) for n in raw if n.strip()}
    names.update(view.member_speakers)
    return frozenset(names)


def annotate_views(
    views: list[View],
    provider: AnnotationProvider,
    embedder: EmbeddingProvider,
    participant_mode: str = "mentions",
) -> list[View]:
    """Return copies of ``views`` with participants, topic, and topic_vec set."""
    if participant_mode not in PARTICIPANT_MODES:
        raise AnnotationError(f"unknown participant_mode {participant_mode!r}")
    annotated: list[View] = []
    for view in views:
        if participant_mode == "speakers":
            participants = frozenset(view.member_speakers)
        else:
            participants = extract_participants(provider, view)
        try:
            topic = provider.extract_topic(view.text)
            topic_vec = embedder.embed(topic)
        except ProviderError as exc:
            exc.item_id = exc.item_id or view.id
            raise
        annotated.append(view.with_annotations(participants, topic, topic_vec))
    return annotated

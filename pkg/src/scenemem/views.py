"""Windowed view construction: one view per message.

A view is the atomic observation unit: the center message plus up to ``w``
neighbors on each side, clamped at boundaries. Clamping substitutes the
boundary neighbor, so the resulting duplicates are collapsed (member sets at
the edges are simply shorter). Windows never cross session boundaries:
sessions are days apart and a window spanning them would manufacture false
adjacency.

Time and location of a view come from its center message; participants,
topic, and the topic vector are filled later by the annotation stage.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime

from .dialogue import Dialogue, Message


@dataclass(frozen=True)
class View:
    """A clamped message window with annotation slots.

    ``member_speakers`` holds the normalized speaker of each member message,
    parallel to ``member_ids``; it lets role logic run without the Dialogue.
    ``participants``/``topic``/``topic_vec`` are empty until annotated.
    """

    id: str
    center_id: str
    member_ids: tuple[str, ...]
    member_speakers: tuple[str, ...]
    text: str
    time: datetime
    location: str
    participants: frozenset[str] = frozenset()
    topic: str = ""
    topic_vec: tuple[float, ...] = ()

    @property
    def annotated(self) -> bool:
        return bool(self.participants) and bool(self.topic_vec)

    def with_annotations(
        self, participants: frozenset[str], topic: str, topic_vec: tuple[float, ...]
    ) -> "View":
        return replace(self, participants=participants, topic=topic, topic_vec=topic_vec)


def view_text(members: list[Message]) -> str:
    """Concatenate member texts in order, one line each, speaker-prefixed."""
    return "\n".join(f"{m.speaker_display}: {m.text}" for m in members)


def build_views(dialogue: Dialogue, w: int) -> list[View]:
    """Build exactly one view per message with window half-width ``w``.

    For the message at session-local position i the member range is
    [i-w, i+w] clamped to the session; members are contiguous and
    de-duplicated, so |members| <= 2w+1.
    """
    if w < 0:
        raise ValueError(f"window size must be >= 0, got {w}")
    by_session: dict[str, list[Message]] = {}
    position: dict[str, int] = {}
    for m in dialogue.messages:
        session = by_session.setdefault(m.session_id, [])
        position[m.id] = len(session)
        session.append(m)

    views: list[View] = []
    for m in dialogue.messages:
        session = by_session[m.session_id]
        i = position[m.id]
        lo = max(0, i - w)
        hi = min(len(session) - 1, i + w)
        members = session[lo : hi + 1]
        views.append(
            View(
                id=m.id,
                center_id=m.id,
                member_ids=tuple(member.id for member in members),
                member_speakers=tuple(member.speaker for member in members),
                text=view_text(members),
                time=m.timestamp,
                location=m.location,
            )
        )
    return views

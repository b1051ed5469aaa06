"""Per-character view streams and MC/SC role labels.

Each annotated view is replicated into the stream of every participant.
A character's per-view role is MC when they speak one of the view's member
messages, SC when they are only mentioned. The per-scene role is always
derived from member views (speaker of at least one member view => MC),
never stored independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import AnnotationError
from .views import View


class RoleLabel(str, Enum):
    MC = "MC"
    SC = "SC"


@dataclass(frozen=True)
class StreamEntry:
    view: View
    role: RoleLabel


@dataclass(frozen=True)
class CharacterStream:
    """Time-ordered views a character participates in, with per-view roles."""

    character: str
    entries: tuple[StreamEntry, ...]

    @property
    def views(self) -> tuple[View, ...]:
        return tuple(e.view for e in self.entries)


def view_role(character: str, view: View) -> RoleLabel:
    """MC iff the character speaks a member message of the view."""
    return RoleLabel.MC if character in view.member_speakers else RoleLabel.SC


def build_streams(views: list[View]) -> dict[str, CharacterStream]:
    """Group annotated views into per-character streams.

    Views must already carry participants; order within a stream follows
    view time with the original view order breaking ties.
    """
    for view in views:
        if not view.participants:
            raise AnnotationError(f"view {view.id} has no participants; annotate views first")
    buckets: dict[str, list[StreamEntry]] = {}
    indexed = sorted(range(len(views)), key=lambda i: (views[i].time, i))
    for i in indexed:
        view = views[i]
        for character in sorted(view.participants):
            buckets.setdefault(character, []).append(StreamEntry(view, view_role(character, view)))
    return {
        character: CharacterStream(character=character, entries=tuple(entries))
        for character, entries in buckets.items()
    }

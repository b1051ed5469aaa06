"""Episodic index: scene embeddings, cue maps, k-NN retrieval, expansion.

The index stores one embedding row per finalized scene plus inverted maps
from participants, representative locations, and calendar days to scene
ids. Retrieval embeds the question, ranks scenes by exact cosine
similarity, then narrows the candidates with whatever cue classes the
question supports; if narrowing would empty the result, the unfiltered
ranking is returned instead so a non-empty index never yields nothing.

The index also carries a message table so retrieved scenes can be
expanded back to their underlying dialogue lines without re-reading the
corpus.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .dialogue import Dialogue, normalize_name
from .errors import AnnotationError, IndexStateError, SceneMemError
from .providers.base import AnnotationProvider, EmbeddingProvider
from .scenes import CharacterProfile, Scene

CUE_CLASSES = ("person", "day", "location")


class MessageRecord(NamedTuple):
    order: int
    speaker: str
    text: str


@dataclass
class EpisodicIndex:
    scenes: dict[str, Scene]
    ids: tuple[str, ...]
    matrix: np.ndarray
    cue_participants: dict[str, tuple[str, ...]]
    cue_locations: dict[str, tuple[str, ...]]
    cue_days: dict[str, tuple[str, ...]]
    profiles: dict[str, CharacterProfile]
    messages: dict[str, MessageRecord]

    def __len__(self) -> int:
        return len(self.ids)


def build_episodic_index(
    scenes: Iterable[Scene],
    profiles: dict[str, CharacterProfile],
    dialogue: Dialogue,
) -> EpisodicIndex:
    """Assemble the index from finalized scenes.

    The dialogue supplies the message table used by expand_to_messages;
    message order there is the original corpus order.
    """
    table: dict[str, Scene] = {}
    vectors: list[tuple[float, ...]] = []
    participants: dict[str, list[str]] = {}
    locations: dict[str, list[str]] = {}
    days: dict[str, list[str]] = {}
    for scene in scenes:
        if scene.id in table:
            raise IndexStateError(f"duplicate scene id {scene.id!r}")
        if not scene.summary_vec:
            raise AnnotationError(f"scene {scene.id} has no summary embedding; finalize scenes first")
        table[scene.id] = scene
        vectors.append(scene.summary_vec)
        for person in scene.participants:
            participants.setdefault(person, []).append(scene.id)
        loc = scene.location_rep.strip().casefold()
        if loc:
            locations.setdefault(loc, []).append(scene.id)
        for day in scene.day_set():
            days.setdefault(day, []).append(scene.id)
    widths = {len(v) for v in vectors}
    if len(widths) > 1:
        raise IndexStateError(f"scene embeddings have mixed dimensions: {sorted(widths)}")
    dim = widths.pop() if widths else 0
    matrix = np.array(vectors, dtype=np.float64).reshape(len(vectors), dim)
    messages = {
        m.id: MessageRecord(order=i, speaker=m.speaker_display, text=m.text)
        for i, m in enumerate(dialogue.messages)
    }
    return EpisodicIndex(
        scenes=table,
        ids=tuple(table),
        matrix=matrix,
        cue_participants={k: tuple(v) for k, v in sorted(participants.items())},
        cue_locations={k: tuple(v) for k, v in sorted(locations.items())},
        cue_days={k: tuple(v) for k, v in sorted(days.items())},
        profiles=profiles,
        messages=messages,
    )


_MONTHS = {
    name: i + 1
    for i, name in enumerate(
        (
            "january", "february", "march", "april", "may", "june",
            "july", "august", "september", "october", "november", "december",
        )
    )
}
_MONTH_ALT = "|".join(list(_MONTHS) + [m[:3] for m in _MONTHS])
_DATE_PATTERNS = (
    re.compile(r"\b(?P<y>\d{4})-(?P<m>\d{2})-(?P<d>\d{2})\b"),
    re.compile(
        rf"\b(?P<d>\d{{1,2}})(?:st|nd|rd|th)?\s+(?P<mon>{_MONTH_ALT})\.?,?\s+(?P<y>\d{{4}})\b",
        re.IGNORECASE,
    ),
    re.compile(
        rf"\b(?P<mon>{_MONTH_ALT})\.?\s+(?P<d>\d{{1,2}})(?:st|nd|rd|th)?,?\s+(?P<y>\d{{4}})\b",
        re.IGNORECASE,
    ),
)


def extract_day_cues(text: str) -> tuple[str, ...]:
    """Calendar days named in the text, as ISO dates, first-seen order."""
    found: list[str] = []
    for pattern in _DATE_PATTERNS:
        for m in pattern.finditer(text):
            if "mon" in m.groupdict() and m.group("mon"):
                mon_key = m.group("mon").casefold()
                month = _MONTHS.get(mon_key) or _MONTHS[
                    next(full for full in _MONTHS if full.startswith(mon_key))
                ]
            else:
                month = int(m.group("m"))
            day, year = int(m.group("d")), int(m.group("y"))
            if not (1 <= month <= 12 and 1 <= day <= 31):
                continue
            iso = f"{year:04d}-{month:02d}-{day:02d}"
            if iso not in found:
                found.append(iso)
    return tuple(found)


def extract_location_cues(text: str, indexed_locations: Iterable[str]) -> tuple[str, ...]:
    """Indexed location labels that occur (word-bounded) in the text."""
    hay = text.casefold()
    found = []
    for loc in indexed_locations:
        if re.search(rf"(?<!\w){re.escape(loc)}(?!\w)", hay):
            found.append(loc)
    return tuple(found)


@dataclass(frozen=True)
class QueryCues:
    """Per-class cue values extracted from a question."""

    persons: tuple[str, ...] = ()
    days: tuple[str, ...] = ()
    locations: tuple[str, ...] = ()

    def values(self, cue_class: str) -> tuple[str, ...]:
        return {"person": self.persons, "day": self.days, "location": self.locations}[cue_class]


def extract_cues(query: str, index: EpisodicIndex, provider: AnnotationProvider) -> QueryCues:
    persons = tuple(dict.fromkeys(normalize_name(p) for p in provider.extract_participants(query)))
    return QueryCues(
        persons=persons,
        days=extract_day_cues(query),
        locations=extract_location_cues(query, index.cue_locations),
    )


@dataclass(frozen=True)
class RetrievedScene:
    scene: Scene
    similarity: float


@dataclass(frozen=True)
class EpisodicResult:
    scenes: tuple[RetrievedScene, ...]
    applied_cues: dict[str, tuple[str, ...]] = field(default_factory=dict)
    fallback: bool = False

    @property
    def scene_ids(self) -> tuple[str, ...]:
        return tuple(r.scene.id for r in self.scenes)


def episodic_retrieve(
    index: EpisodicIndex,
    query: str,
    embedder: EmbeddingProvider,
    k: int,
    cues: QueryCues | None = None,
) -> EpisodicResult:
    """Rank scenes by cosine similarity, then narrow by applicable cues.

    A cue class applies only when the query yielded values for it and at
    least one value is indexed; candidates failing any applied class are
    dropped. An emptied candidate list falls back to the unfiltered
    ranking (with no cues marked applied).
    """
    if not query.strip():
        raise SceneMemError("episodic query is empty")
    if k < 1:
        raise SceneMemError(f"k must be >= 1, got {k}")
    if not index.ids:
        return EpisodicResult(scenes=())
    q = np.array(embedder.embed(query), dtype=np.float64)
    if q.shape[0] != index.matrix.shape[1]:
        raise IndexStateError(
            f"query embedding dimension {q.shape[0]} does not match index {index.matrix.shape[1]}"
        )
    scores = index.matrix @ q
    order = sorted(range(len(index.ids)), key=lambda i: (-scores[i], index.ids[i]))
    candidates = [
        RetrievedScene(scene=index.scenes[index.ids[i]], similarity=float(scores[i]))
        for i in order[:k]
    ]
    if cues is None:
        return EpisodicResult(scenes=tuple(candidates))

    cue_maps = {
        "person": index.cue_participants,
        "day": index.cue_days,
        "location": index.cue_locations,
    }
    applied: dict[str, tuple[str, ...]] = {}
    allowed: dict[str, set[str]] = {}
    for cue_class in CUE_CLASSES:
        values = cues.values(cue_class)
        matched = [v for v in values if v in cue_maps[cue_class]]
        if values and matched:
            applied[cue_class] = tuple(matched)
            allowed[cue_class] = {
                scene_id for v in matched for scene_id in cue_maps[cue_class][v]
            }
    if not applied:
        return EpisodicResult(scenes=tuple(candidates))
    survivors = [
        c for c in candidates if all(c.scene.id in ids for ids in allowed.values())
    ]
    if survivors:
        return EpisodicResult(scenes=tuple(survivors), applied_cues=applied)
    return EpisodicResult(scenes=tuple(candidates), fallback=True)


@dataclass(frozen=True)
class EvidencePassage:
    """One retrieved scene rendered as dialogue lines with a header."""

    scene_id: str
    header: str
    message_ids: tuple[str, ...]
    lines: tuple[str, ...]

    @property
    def text(self) -> str:
        return "\n".join((self.header,) + self.lines)


def scene_header(scene: Scene) -> str:
    start = scene.t_min.date().isoformat()
    end = scene.t_max.date().isoformat()
    span = start if start == end else f"{start} .. {end}"
    location = scene.location_rep or "unknown location"
    return f"[{span} | {location}]"


def expand_to_messages(index: EpisodicIndex, scene_ids: Iterable[str]) -> tuple[EvidencePassage, ...]:
    """Render each scene, in rank order, as its deduplicated member messages."""
    passages = []
    for scene_id in scene_ids:
        scene = index.scenes.get(scene_id)
        if scene is None:
            raise IndexStateError(f"unknown scene id {scene_id!r}")
        member_ids = {mid for view in scene.member_views for mid in view.member_ids}
        for mid in member_ids:
            if mid not in index.messages:
                raise IndexStateError(f"scene {scene_id} references unknown message {mid!r}")
        ordered = sorted(member_ids, key=lambda mid: index.messages[mid].order)
        lines = tuple(
            f"{index.messages[mid].speaker}: {index.messages[mid].text}" for mid in ordered
        )
        passages.append(
            EvidencePassage(
                scene_id=scene_id,
                header=scene_header(scene),
                message_ids=tuple(ordered),
                lines=lines,
            )
        )
    return tuple(passages)

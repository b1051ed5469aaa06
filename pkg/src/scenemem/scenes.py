"""Greedy scene aggregation and character profiles.

A scene is a growing cluster of views within one character stream. Views
are scanned in time order; each one joins the first existing scene (in
creation order) where at least two of the three continuity tests pass:

    delta_t   = |view time - latest member time|        <= delta_t threshold
    delta_loc = exact-match distance to the scene's modal location (0/1)
    delta_top = cosine distance to the scene's running topic centroid

otherwise it opens a new scene. The scan order and the first-fit rule are
load-bearing: results depend on them, so they are never reordered.

Threshold ranges are validated at the config layer, not here; degenerate
values (infinite, or negative so that every test fails) are legitimate
inputs for pinning down the clustering behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

from .dialogue import normalize_name
from .errors import AnnotationError, ProviderError, SceneMemError
from .providers.base import AnnotationProvider, EmbeddingProvider
from .streams import CharacterStream, RoleLabel
from .views import View

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class SceneThresholds:
    """Continuity bounds: time in days, location 0/1, topic cosine distance."""

    delta_t: float = 1.0
    delta_l: float = 0.0
    delta_tau: float = 0.7


@dataclass
class AggregationStats:
    """Counts scene-match decisions for complexity checks."""

    decisions: int = 0


def d_location(a: str, b: str) -> float:
    """0 when both labels are non-empty and equal after normalization, else 1."""
    a_norm = a.strip().casefold()
    b_norm = b.strip().casefold()
    if a_norm and b_norm and a_norm == b_norm:
        return 0.0
    return 1.0


def d_topic(u: tuple[float, ...], v: tuple[float, ...]) -> float:
    """Cosine distance 1 - cos(u, v), in [0, 2]."""
    if len(u) != len(v):
        raise SceneMemError(f"topic vector dimensions differ: {len(u)} vs {len(v)}")
    dot = sum(x * y for x, y in zip(u, v))
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(y * y for y in v))
    if nu == 0.0 or nv == 0.0:
        raise SceneMemError("topic distance is undefined for zero vectors")
    return 1.0 - dot / (nu * nv)


@dataclass
class Scene:
    """A cluster of views with running representatives.

    ``topic_sum`` accumulates member topic vectors so the centroid stays an
    exact mean; ``location_counts`` backs the modal location with first-seen
    tie-breaking. ``summary``/``summary_vec`` are empty until finalized.
    """

    id: str
    character: str
    member_views: list[View] = field(default_factory=list)
    t_min: datetime = datetime.max
    t_max: datetime = datetime.min
    topic_sum: list[float] = field(default_factory=list)
    location_counts: dict[str, int] = field(default_factory=dict)
    location_display: dict[str, str] = field(default_factory=dict)
    participants: set[str] = field(default_factory=set)
    summary: str = ""
    summary_vec: tuple[float, ...] = ()

    @property
    def topic_centroid(self) -> tuple[float, ...]:
        n = len(self.member_views)
        return tuple(x / n for x in self.topic_sum)

    @property
    def location_rep(self) -> str:
        """Most frequent member location; ties resolve to the earliest seen."""
        if not self.location_counts:
            return ""
        best = max(self.location_counts.values())
        for key in self.location_counts:  # insertion order = first seen
            if self.location_counts[key] == best:
                return self.location_display[key]
        raise AssertionError("unreachable")

    @property
    def member_view_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.member_views)

    def day_set(self) -> set[str]:
        return {v.time.date().isoformat() for v in self.member_views}


def update_scene_stats(scene: Scene, view: View) -> Scene:
    """Fold a joining view into the scene's running statistics."""
    if not scene.member_views:
        scene.topic_sum = [0.0] * len(view.topic_vec)
        scene.t_min = view.time
        scene.t_max = view.time
    scene.member_views.append(view)
    scene.t_min = min(scene.t_min, view.time)
    scene.t_max = max(scene.t_max, view.time)
    scene.topic_sum = [a + b for a, b in zip(scene.topic_sum, view.topic_vec)]
    loc_key = view.location.strip().casefold()
    scene.location_counts[loc_key] = scene.location_counts.get(loc_key, 0) + 1
    scene.location_display.setdefault(loc_key, view.location)
    scene.participants.update(view.participants)
    return scene


def days_between(a: datetime, b: datetime) -> float:
    return abs((a - b).total_seconds()) / SECONDS_PER_DAY


def aggregate(
    stream: CharacterStream,
    thresholds: SceneThresholds,
    stats: AggregationStats | None = None,
) -> list[Scene]:
    """Greedy first-fit clustering of one character stream into scenes."""
    scenes: list[Scene] = []
    for entry in stream.entries:
        view = entry.view
        if not view.topic_vec:
            raise AnnotationError(f"view {view.id} has no topic vector; annotate views first")
        placed = False
        for scene in scenes:
            if stats is not None:
                stats.decisions += 1
            delta_t = days_between(view.time, scene.t_max)
            delta_l = d_location(view.location, scene.location_rep)
            delta_tau = d_topic(view.topic_vec, scene.topic_centroid)
            passed = (
                (delta_t <= thresholds.delta_t)
                + (delta_l <= thresholds.delta_l)
                + (delta_tau <= thresholds.delta_tau)
            )
            if passed >= 2:
                update_scene_stats(scene, view)
                placed = True
                break
        if not placed:
            scene = Scene(id=f"{stream.character}:{len(scenes)}", character=stream.character)
            update_scene_stats(scene, view)
            scenes.append(scene)
    return scenes


def finalize_scenes(
    scenes: list[Scene], provider: AnnotationProvider, embedder: EmbeddingProvider
) -> list[Scene]:
    """Fill each scene's summary and summary embedding."""
    for scene in scenes:
        try:
            scene.summary = provider.summarize_scene([v.text for v in scene.member_views])
            scene.summary_vec = embedder.embed(scene.summary)
        except ProviderError as exc:
            exc.item_id = exc.item_id or scene.id
            raise
    return scenes


def scene_role(character: str, scene: Scene) -> RoleLabel:
    """MC iff the character speaks in at least one member view of the scene."""
    key = normalize_name(character)
    if key not in scene.participants:
        raise SceneMemError(f"{character!r} is not a participant of scene {scene.id}")
    for view in scene.member_views:
        if key in view.member_speakers:
            return RoleLabel.MC
    return RoleLabel.SC


@dataclass(frozen=True)
class CharacterProfile:
    """Time-ordered (scene id, role) pairs for one character."""

    character: str
    entries: tuple[tuple[str, RoleLabel], ...]


def build_profiles(scenes_by_character: dict[str, list[Scene]]) -> dict[str, CharacterProfile]:
    """Assemble profiles from each character's own finalized scenes.

    Scenes are ordered by start time; equal start times keep creation order.
    """
    profiles: dict[str, CharacterProfile] = {}
    for character, scenes in scenes_by_character.items():
        ordered = sorted(enumerate(scenes), key=lambda pair: (pair[1].t_min, pair[0]))
        profiles[character] = CharacterProfile(
            character=character,
            entries=tuple((scene.id, scene_role(character, scene)) for _, scene in ordered),
        )
    return profiles

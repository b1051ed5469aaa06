"""Versioned on-disk container for the dual index.

One self-describing JSON file holds everything a query needs: the
canonical dialogue, annotated views, scene records with their embedding
block and cue maps, character profiles, and the semantic graph parts.
Serialization is key-sorted with fixed separators, so rebuilding from
unchanged inputs yields a byte-identical file.

Loading refuses containers written under a different format version or a
different embedding dimension than the configured embedder; there is no
silent migration. Writers take an exclusive lock file per index
directory; readers never lock.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterator

import numpy as np

from .dialogue import Dialogue, dialogue_from_canonical, dialogue_to_canonical
from .episodic import EpisodicIndex, build_episodic_index
from .errors import (
    DimensionMismatchError,
    LockError,
    PersistenceError,
    VersionMismatchError,
)
from .scenes import CharacterProfile, Scene, update_scene_stats
from .semantic import GraphTriple, SemanticGraph, assemble_graph
from .streams import RoleLabel
from .views import View

FORMAT_VERSION = 1
CONTAINER_NAME = "index.json"
LOCK_NAME = "lock"


@contextmanager
def write_lock(index_dir: str | Path) -> Iterator[None]:
    """Exclusive writer lock; readers are lock-free."""
    path = Path(index_dir) / LOCK_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        holder = ""
        try:
            holder = path.read_text(encoding="utf-8").strip()
        except OSError:
            pass
        raise LockError(
            f"index directory {index_dir} is locked by another writer"
            + (f" (pid {holder})" if holder else "")
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield
    finally:
        try:
            path.unlink()
        except OSError:
            pass


def _view_record(view: View) -> dict:
    return {
        "id": view.id,
        "center_id": view.center_id,
        "member_ids": list(view.member_ids),
        "member_speakers": list(view.member_speakers),
        "text": view.text,
        "time": view.time.isoformat(),
        "location": view.location,
        "participants": sorted(view.participants),
        "topic": view.topic,
        "topic_vec": list(view.topic_vec),
    }


def _view_from_record(record: dict) -> View:
    return View(
        id=record["id"],
        center_id=record["center_id"],
        member_ids=tuple(record["member_ids"]),
        member_speakers=tuple(record["member_speakers"]),
        text=record["text"],
        time=datetime.fromisoformat(record["time"]),
        location=record["location"],
        participants=frozenset(record["participants"]),
        topic=record["topic"],
        topic_vec=tuple(record["topic_vec"]),
    )


def container_dict(
    dialogue: Dialogue,
    views: list[View],
    scenes: list[Scene],
    profiles: dict[str, CharacterProfile],
    graph: SemanticGraph,
    config: dict,
    dimension: int,
) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "dimension": dimension,
        "scene_count": len(scenes),
        "config": config,
        "dialogue": dialogue_to_canonical(dialogue),
        "views": [_view_record(v) for v in views],
        "scenes": [
            {
                "id": s.id,
                "character": s.character,
                "member_view_ids": list(s.member_view_ids),
                "summary": s.summary,
            }
            for s in scenes
        ],
        "embedding_block": [list(s.summary_vec) for s in scenes],
        "cue_maps": None,  # filled by save_container from the built index
        "profiles": {
            c: [[scene_id, role.value] for scene_id, role in p.entries]
            for c, p in profiles.items()
        },
        "semantic": {
            "phrases": list(graph.phrases),
            "phrase_matrix": [list(row) for row in graph.phrase_matrix.tolist()],
            "passage_ids": list(graph.passage_ids),
            "passage_texts": graph.passage_texts,
            "passage_matrix": [list(row) for row in graph.passage_matrix.tolist()],
            "triples": [list(t) for t in graph.triples],
            "synonym_threshold": graph.synonym_threshold,
        },
    }


def container_bytes(container: dict) -> bytes:
    return (json.dumps(container, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def save_container(
    index_dir: str | Path,
    dialogue: Dialogue,
    views: list[View],
    scenes: list[Scene],
    profiles: dict[str, CharacterProfile],
    episodic: EpisodicIndex,
    graph: SemanticGraph,
    config: dict,
    dimension: int,
) -> Path:
    """Write the container atomically under the writer lock."""
    directory = Path(index_dir)
    container = container_dict(dialogue, views, scenes, profiles, graph, config, dimension)
    container["cue_maps"] = {
        "participants": {k: list(v) for k, v in episodic.cue_participants.items()},
        "locations": {k: list(v) for k, v in episodic.cue_locations.items()},
        "days": {k: list(v) for k, v in episodic.cue_days.items()},
    }
    data = container_bytes(container)
    with write_lock(directory):
        tmp = directory / (CONTAINER_NAME + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, directory / CONTAINER_NAME)
    return directory / CONTAINER_NAME


@dataclass
class LoadedIndex:
    dialogue: Dialogue
    views: dict[str, View]
    scenes: dict[str, Scene]
    profiles: dict[str, CharacterProfile]
    episodic: EpisodicIndex
    semantic: SemanticGraph
    config: dict


def load_container(index_dir: str | Path, expected_dimension: int) -> LoadedIndex:
    path = Path(index_dir) / CONTAINER_NAME
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise PersistenceError(f"no index container at {path}: {exc}") from exc
    try:
        container = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise PersistenceError(f"index container {path} is corrupt: {exc}") from exc
    version = container.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(found=version, expected=FORMAT_VERSION)
    dimension = container.get("dimension")
    if dimension != expected_dimension:
        raise DimensionMismatchError(found=dimension, expected=expected_dimension)

    dialogue = dialogue_from_canonical(container["dialogue"])
    views = [_view_from_record(r) for r in container["views"]]
    views_by_id = {v.id: v for v in views}

    scenes: list[Scene] = []
    embedding_block = container["embedding_block"]
    if len(embedding_block) != len(container["scenes"]):
        raise PersistenceError("embedding block does not align with scene records")
    for record, row in zip(container["scenes"], embedding_block):
        scene = Scene(id=record["id"], character=record["character"])
        for view_id in record["member_view_ids"]:
            view = views_by_id.get(view_id)
            if view is None:
                raise PersistenceError(f"scene {record['id']} references unknown view {view_id!r}")
            update_scene_stats(scene, view)
        scene.summary = record["summary"]
        scene.summary_vec = tuple(row)
        if len(scene.summary_vec) != expected_dimension:
            raise DimensionMismatchError(found=len(scene.summary_vec), expected=expected_dimension)
        scenes.append(scene)

    profiles = {
        c: CharacterProfile(
            character=c, entries=tuple((sid, RoleLabel(role)) for sid, role in entries)
        )
        for c, entries in container["profiles"].items()
    }
    episodic = build_episodic_index(scenes, profiles, dialogue)
    stored_cues = container.get("cue_maps") or {}
    rebuilt_cues = {
        "participants": {k: list(v) for k, v in episodic.cue_participants.items()},
        "locations": {k: list(v) for k, v in episodic.cue_locations.items()},
        "days": {k: list(v) for k, v in episodic.cue_days.items()},
    }
    if stored_cues != rebuilt_cues:
        raise PersistenceError("container cue maps are inconsistent with scene records")

    sem = container["semantic"]
    phrase_matrix = np.array(sem["phrase_matrix"], dtype=np.float64)
    if not sem["phrases"]:
        phrase_matrix = phrase_matrix.reshape(0, 0)
    graph = assemble_graph(
        phrases=tuple(sem["phrases"]),
        phrase_matrix=phrase_matrix,
        passage_ids=tuple(sem["passage_ids"]),
        passage_texts=dict(sem["passage_texts"]),
        passage_matrix=np.array(sem["passage_matrix"], dtype=np.float64),
        triples=tuple(GraphTriple(s, p, o, src) for s, p, o, src in sem["triples"]),
        synonym_threshold=sem["synonym_threshold"],
    )
    return LoadedIndex(
        dialogue=dialogue,
        views=views_by_id,
        scenes={s.id: s for s in scenes},
        profiles=profiles,
        episodic=episodic,
        semantic=graph,
        config=container.get("config", {}),
    )

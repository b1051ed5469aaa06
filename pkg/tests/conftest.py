"""Shared fixtures: corpora, providers, and prebuilt pipeline stages."""

from __future__ import annotations

import json
from datetime import datetime, timedelta

import pytest

from scenemem.annotate import annotate_views
from scenemem.config import EngineConfig
from scenemem.dialogue import parse_dialogue
from scenemem.engine import build_memory
from scenemem.providers.reference import ReferenceEmbedder, ReferenceProvider
from scenemem.views import View

# Two friends discuss a dance competition in the studio, then meet again
# days later in a cafe; a third character is only ever mentioned. Small
# enough to trace by hand, rich enough to exercise every pipeline stage.
DUET_CORPUS = {
    "metadata": {"lexicon": ["Caroline", "Melanie", "Gina"]},
    "sessions": [
        {
            "session_id": "s1",
            "date": "2023-05-08",
            "location": "Dance studio",
            "turns": [
                {
                    "speaker": "Caroline",
                    "text": "The results from the dance competition are finally in.",
                },
                {
                    "speaker": "Melanie",
                    "text": "Amazing, the team really earned first place last night.",
                },
                {
                    "speaker": "Caroline",
                    "text": "Gina told me they won with a contemporary piece called Finding Freedom.",
                },
            ],
        },
        {
            "session_id": "s2",
            "date": "2023-05-12",
            "location": "Cafe",
            "turns": [
                {"speaker": "Melanie", "text": "This cafe has the best pastries in town."},
                {"speaker": "Caroline", "text": "Agreed, the espresso here is wonderful too."},
            ],
        },
    ],
}

DUET_LEXICON = ("Caroline", "Melanie", "Gina")


def duet_corpus_bytes() -> bytes:
    return json.dumps(DUET_CORPUS).encode("utf-8")


@pytest.fixture
def duet_dialogue():
    return parse_dialogue(duet_corpus_bytes(), "canonical")


@pytest.fixture
def duet_provider():
    return ReferenceProvider(lexicon=DUET_LEXICON)


@pytest.fixture
def embedder():
    return ReferenceEmbedder(dimension=256)


@pytest.fixture
def duet_config():
    return EngineConfig(lexicon=DUET_LEXICON)


@pytest.fixture
def duet_memory(duet_dialogue, duet_config, duet_provider, embedder):
    """The whole offline pipeline run on the duet corpus with defaults."""
    return build_memory(duet_dialogue, duet_config, duet_provider, embedder)


@pytest.fixture
def duet_workspace(tmp_path):
    """A workspace directory with the duet corpus file written next to it."""
    corpus = tmp_path / "corpus.json"
    corpus.write_bytes(duet_corpus_bytes())
    workspace = tmp_path / "ws"
    return workspace, corpus


def make_view(
    view_id: str,
    time: datetime,
    location: str,
    topic_vec: tuple[float, ...],
    speakers: tuple[str, ...] = ("alice",),
    participants: frozenset[str] | None = None,
    text: str = "",
) -> View:
    """Hand-built annotated view for stream/scene unit tests."""
    return View(
        id=view_id,
        center_id=view_id,
        member_ids=(view_id,),
        member_speakers=speakers,
        text=text or f"{speakers[0]}: filler text for {view_id}",
        time=time,
        location=location,
        participants=participants or frozenset(speakers),
        topic="topic",
        topic_vec=topic_vec,
    )


def day(offset: int, hour: int = 9) -> datetime:
    """Timestamps a fixed stretch of days apart, for threshold tests."""
    return datetime(2024, 3, 1, hour) + timedelta(days=offset)

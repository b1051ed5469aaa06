"""Stable promotion fusion of semantic and episodic evidence, plus QA.

Fusion never rescores and never adds candidates: semantic entries that the
episodic side also surfaced move to the front, everything keeps the
semantic ranking's relative order, and the output is always a permutation
of the semantic input. Membership is decided purely on entry ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from .dialogue import normalize_name
from .episodic import EpisodicIndex, EpisodicResult, QueryCues, episodic_retrieve
from .errors import ProviderError, SceneMemError
from .providers.base import AnnotationProvider, EmbeddingProvider
from .providers.prompts import generation_prompt
from .semantic import SemanticResult
from .views import View

ORIGINS = ("semantic", "episodic", "both")


@dataclass(frozen=True)
class EvidenceEntry:
    id: str
    text: str
    score: float
    origin: str


@dataclass
class FusionStats:
    """Counts constant-time set operations for complexity checks."""

    decisions: int = 0


def semantic_entries(result: SemanticResult) -> list[EvidenceEntry]:
    return [
        EvidenceEntry(id=p.id, text=p.text, score=p.score, origin="semantic")
        for p in result.passages
    ]


def scene_entries(result: EpisodicResult) -> list[EvidenceEntry]:
    """Project retrieved scenes onto their member views, first hit wins."""
    entries: list[EvidenceEntry] = []
    seen: set[str] = set()
    for retrieved in result.scenes:
        for view in retrieved.scene.member_views:
            if view.id not in seen:
                seen.add(view.id)
                entries.append(
                    EvidenceEntry(
                        id=view.id,
                        text=view.text,
                        score=retrieved.similarity,
                        origin="episodic",
                    )
                )
    return entries


def episodic_entries(
    index: EpisodicIndex,
    query: str,
    embedder: EmbeddingProvider,
    k: int,
    cues: QueryCues | None = None,
) -> list[EvidenceEntry]:
    """Episodic retrieval projected to view-level evidence entries."""
    return scene_entries(episodic_retrieve(index, query, embedder, k, cues))


def fuse(
    sem: Sequence[EvidenceEntry],
    epi: Sequence[EvidenceEntry],
    stats: FusionStats | None = None,
) -> list[EvidenceEntry]:
    """Promote the episodic intersection to the front, preserving order."""
    seen: set[str] = set()
    for entry in sem:
        if entry.id in seen:
            raise SceneMemError(f"duplicate id {entry.id!r} in semantic evidence")
        seen.add(entry.id)
    episodic_ids: set[str] = set()
    for entry in epi:
        episodic_ids.add(entry.id)
        if stats is not None:
            stats.decisions += 1
    promoted: list[EvidenceEntry] = []
    remainder: list[EvidenceEntry] = []
    for entry in sem:
        if stats is not None:
            stats.decisions += 1
        if entry.id in episodic_ids:
            promoted.append(replace(entry, origin="both"))
        else:
            remainder.append(entry)
    return promoted + remainder


def fuse_slot3(
    sem: Sequence[EvidenceEntry],
    epi: Sequence[EvidenceEntry],
) -> list[EvidenceEntry]:
    """Fixed-position injection used only as an evaluation ablation.

    The top episodic entry is forced into the third slot of the semantic
    ranking (deduplicated, length preserved) instead of the stable
    promotion rerank.
    """
    seen: set[str] = set()
    for entry in sem:
        if entry.id in seen:
            raise SceneMemError(f"duplicate id {entry.id!r} in semantic evidence")
        seen.add(entry.id)
    if not epi:
        return list(sem)
    top = epi[0]
    rest = [e for e in sem if e.id != top.id]
    injected = replace(top, origin="both" if top.id in seen else "episodic")
    slot = min(2, len(rest))
    out = rest[:slot] + [injected] + rest[slot:]
    return out[: len(sem)]


def majority_speaker(view: View) -> str:
    """Speaker of most member messages; ties go to the earliest speaker."""
    counts: dict[str, int] = {}
    for speaker in view.member_speakers:
        counts[speaker] = counts.get(speaker, 0) + 1
    best = max(counts.values())
    for speaker in counts:  # insertion order = first appearance
        if counts[speaker] == best:
            return speaker
    raise AssertionError("unreachable")


def memory_lines(view: View) -> list[str]:
    stamp = f"[{view.time.date().isoformat()} | {view.location or 'unknown location'}]"
    return [f"- {stamp} {line}" for line in view.text.splitlines()]


@dataclass(frozen=True)
class AssembledPrompt:
    text: str
    speaker_blocks: dict[str, tuple[str, ...]] = field(default_factory=dict)


def assemble_prompt(
    question: str,
    evidence: Sequence[EvidenceEntry],
    speakers: tuple[str, str],
    views: dict[str, View],
) -> AssembledPrompt:
    """Fill the generation template with per-speaker memory blocks.

    Each evidence view is attributed to its majority speaker; views whose
    majority speaker is neither named speaker land in the first block.
    Within a block, entries keep their fused order.
    """
    if not evidence:
        raise SceneMemError("no evidence to answer from; retry with a larger k")
    if len(speakers) != 2 or not all(s.strip() for s in speakers):
        raise SceneMemError("answer generation needs the two conversation speakers")
    keys = tuple(normalize_name(s) for s in speakers)
    blocks: dict[str, list[str]] = {keys[0]: [], keys[1]: []}
    for entry in evidence:
        view = views.get(entry.id)
        if view is None:
            raise SceneMemError(f"evidence entry {entry.id!r} has no backing view")
        owner = majority_speaker(view)
        target = owner if owner in blocks else keys[0]
        blocks[target].extend(memory_lines(view))
    filled = generation_prompt(
        speaker_1=speakers[0],
        speaker_1_memories="\n".join(blocks[keys[0]]) or "(no memories retrieved)",
        speaker_2=speakers[1],
        speaker_2_memories="\n".join(blocks[keys[1]]) or "(no memories retrieved)",
        question=question,
    )
    return AssembledPrompt(
        text=filled,
        speaker_blocks={key: tuple(lines) for key, lines in blocks.items()},
    )


def answer_question(
    question: str,
    evidence: Sequence[EvidenceEntry],
    provider: AnnotationProvider,
    speakers: tuple[str, str],
    views: dict[str, View],
) -> str:
    prompt = assemble_prompt(question, evidence, speakers, views)
    try:
        return provider.generate_answer(prompt.text)
    except ProviderError as exc:
        exc.item_id = exc.item_id or question
        raise

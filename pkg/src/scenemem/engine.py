"""Pipeline orchestration: ingest, build, query, evaluate.

The engine owns a workspace directory: the canonical dialogue store lives
at <workspace>/store.json and the index container under the configured
index directory. Offline work (build) runs views -> annotation -> streams
-> scenes -> profiles -> both indices and persists one container; online
work (query) loads the container and walks the two retrieval paths plus
fusion. Evaluation rebuilds in memory per configuration point so sweeps
and ablations cannot leak state between points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .annotate import annotate_views
from .config import EngineConfig
from .dialogue import (
    Dialogue,
    canonical_store_bytes,
    dialogue_from_canonical,
    load_locomo_file,
    parse_dialogue,
)
from .episodic import (
    EpisodicIndex,
    EpisodicResult,
    build_episodic_index,
    episodic_retrieve,
    extract_cues,
)
from .errors import CorpusParseError, PersistenceError, SceneMemError
from .evaluation import QAItem, RunReport, load_questions, run_benchmark
from .fusion import (
    EvidenceEntry,
    answer_question,
    fuse,
    fuse_slot3,
    scene_entries,
    semantic_entries,
)
from .persistence import LoadedIndex, load_container, save_container
from .providers import (
    AnnotationProvider,
    CachedAnnotationProvider,
    EmbeddingProvider,
    HttpProvider,
    HttpProviderConfig,
    ReferenceEmbedder,
    ReferenceProvider,
)
from .scenes import Scene, SceneThresholds, aggregate, build_profiles, finalize_scenes
from .semantic import SemanticGraph, SemanticResult, build_semantic_index, semantic_retrieve
from .streams import build_streams
from .views import View, build_views

STORE_NAME = "store.json"
QUERY_MODES = ("fused", "semantic", "episodic")


def resolve_lexicon(config: EngineConfig, dialogue: Dialogue) -> tuple[str, ...]:
    """Name lexicon for the reference provider.

    Configured names take precedence, then any lexicon or character list
    shipped in the corpus metadata, then the speaker display names.
    """
    candidates: list[str] = list(config.lexicon)
    metadata = dialogue.metadata
    for key in ("lexicon", "characters"):
        value = metadata.get(key)
        if isinstance(value, (list, tuple)):
            candidates.extend(str(v) for v in value)
    candidates.extend(dialogue.speaker_display_names().values())
    return tuple(dict.fromkeys(c.strip() for c in candidates if c.strip()))


def make_embedder(config: EngineConfig) -> EmbeddingProvider:
    return ReferenceEmbedder(config.dimension)


def make_provider(
    config: EngineConfig, dialogue: Dialogue, cache_dir: Path | None = None
) -> AnnotationProvider:
    if config.provider == "http":
        provider: AnnotationProvider = HttpProvider(
            HttpProviderConfig(
                endpoint=config.endpoint,
                model=config.model,
                api_key_env=config.api_key_env,
                timeout=config.request_timeout,
                max_in_flight=config.max_in_flight,
            )
        )
        if cache_dir is not None:
            provider = CachedAnnotationProvider(provider, cache_dir)
        return provider
    return ReferenceProvider(lexicon=resolve_lexicon(config, dialogue))


@dataclass
class MemoryIndex:
    """Everything a query needs, independent of where it came from."""

    dialogue: Dialogue
    views: list[View]
    views_by_id: dict[str, View]
    scenes: list[Scene]
    scenes_by_character: dict[str, list[Scene]]
    profiles: dict
    episodic: EpisodicIndex
    semantic: SemanticGraph


def build_memory(
    dialogue: Dialogue,
    config: EngineConfig,
    provider: AnnotationProvider,
    embedder: EmbeddingProvider,
) -> MemoryIndex:
    """Run the whole offline pipeline in memory."""
    views = build_views(dialogue, config.w)
    views = annotate_views(views, provider, embedder, config.participant_mode)
    streams = build_streams(views)
    thresholds = SceneThresholds(config.delta_t, config.delta_l, config.delta_tau)
    scenes_by_character: dict[str, list[Scene]] = {}
    for character, stream in streams.items():
        scenes_by_character[character] = finalize_scenes(
            aggregate(stream, thresholds), provider, embedder
        )
    profiles = build_profiles(scenes_by_character)
    scenes = [s for char_scenes in scenes_by_character.values() for s in char_scenes]
    episodic = build_episodic_index(scenes, profiles, dialogue)
    semantic = build_semantic_index(
        [(v.id, v.text) for v in views], provider, embedder, config.synonym_threshold
    )
    return MemoryIndex(
        dialogue=dialogue,
        views=views,
        views_by_id={v.id: v for v in views},
        scenes=scenes,
        scenes_by_character=scenes_by_character,
        profiles=profiles,
        episodic=episodic,
        semantic=semantic,
    )


def main_speakers(dialogue: Dialogue) -> tuple[str, str]:
    """The two most talkative speakers (display names), for the QA prompt."""
    counts: dict[str, int] = {}
    for m in dialogue.messages:
        counts[m.speaker] = counts.get(m.speaker, 0) + 1
    ranked = sorted(counts, key=lambda s: -counts[s])
    display = dialogue.speaker_display_names()
    first = display[ranked[0]]
    second = display[ranked[1]] if len(ranked) > 1 else "other"
    return first, second


@dataclass(frozen=True)
class IngestResult:
    sessions: int
    messages: int
    path: str

    def to_dict(self) -> dict:
        return {"sessions": self.sessions, "messages": self.messages, "path": self.path}


@dataclass(frozen=True)
class BuildResult:
    views: int
    scenes: int
    characters: int
    phrases: int
    triples: int
    path: str

    def to_dict(self) -> dict:
        return {
            "views": self.views,
            "scenes": self.scenes,
            "characters": self.characters,
            "phrases": self.phrases,
            "triples": self.triples,
            "path": self.path,
        }


@dataclass(frozen=True)
class QueryTrace:
    question: str
    mode: str
    k: int
    fused: tuple[EvidenceEntry, ...]
    semantic: SemanticResult | None = None
    episodic: EpisodicResult | None = None
    applied_cues: dict = field(default_factory=dict)
    answer: str | None = None

    def to_dict(self) -> dict:
        doc: dict = {
            "question": self.question,
            "mode": self.mode,
            "k": self.k,
            "evidence": [
                {"id": e.id, "origin": e.origin, "score": e.score, "text": e.text}
                for e in self.fused
            ],
            "answer": self.answer,
        }
        if self.semantic is not None:
            doc["semantic"] = {
                "passages": [
                    {"id": p.id, "score": p.score, "dense_score": p.dense_score}
                    for p in self.semantic.passages
                ],
                "seeds": list(self.semantic.seeds),
                "fallback": self.semantic.fallback,
            }
        if self.episodic is not None:
            doc["episodic"] = {
                "scenes": [
                    {"id": r.scene.id, "similarity": r.similarity} for r in self.episodic.scenes
                ],
                "applied_cues": {k: list(v) for k, v in self.episodic.applied_cues.items()},
                "fallback": self.episodic.fallback,
            }
        return doc


class Engine:
    """Facade over the pipeline for one workspace directory."""

    def __init__(self, workspace: str | Path, config: EngineConfig | None = None):
        self.workspace = Path(workspace)
        self.config = config or EngineConfig()
        self._loaded: LoadedIndex | None = None

    @property
    def store_path(self) -> Path:
        return self.workspace / STORE_NAME

    @property
    def index_dir(self) -> Path:
        return self.workspace / self.config.index_dir

    @property
    def cache_dir(self) -> Path:
        return self.workspace / self.config.cache_dir

    # -- ingest ---------------------------------------------------------

    def ingest(self, corpus_path: str | Path, format: str = "auto", sample: int = 0) -> IngestResult:
        try:
            raw = Path(corpus_path).read_bytes()
        except OSError as exc:
            raise CorpusParseError(f"cannot read corpus {corpus_path}: {exc}") from exc
        dialogue = self._parse_corpus(raw, format, sample)
        self.workspace.mkdir(parents=True, exist_ok=True)
        self.store_path.write_bytes(canonical_store_bytes(dialogue))
        self._loaded = None
        return IngestResult(
            sessions=len(dialogue.session_ids),
            messages=len(dialogue.messages),
            path=str(self.store_path),
        )

    @staticmethod
    def _parse_corpus(raw: bytes, format: str, sample: int) -> Dialogue:
        if format == "canonical":
            return parse_dialogue(raw, "canonical")
        if format == "locomo":
            samples = load_locomo_file(raw)
            if not 0 <= sample < len(samples):
                raise CorpusParseError(
                    f"sample index {sample} out of range; file has {len(samples)} sample(s)"
                )
            return parse_dialogue(json.dumps(samples[sample]), "locomo")
        if format != "auto":
            raise CorpusParseError(f"unknown corpus format {format!r}")
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorpusParseError(f"corpus is not valid JSON: {exc}") from exc
        if isinstance(doc, dict) and "sessions" in doc:
            return parse_dialogue(raw, "canonical")
        return Engine._parse_corpus(raw, "locomo", sample)

    def load_dialogue(self) -> Dialogue:
        try:
            raw = self.store_path.read_bytes()
        except OSError as exc:
            raise PersistenceError(
                f"no dialogue store at {self.store_path}; run ingest first"
            ) from exc
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorpusParseError(f"dialogue store is corrupt: {exc}") from exc
        return dialogue_from_canonical(doc)

    # -- build ----------------------------------------------------------

    def build(self) -> BuildResult:
        dialogue = self.load_dialogue()
        embedder = make_embedder(self.config)
        provider = make_provider(self.config, dialogue, self.cache_dir)
        memory = build_memory(dialogue, self.config, provider, embedder)
        path = save_container(
            self.index_dir,
            dialogue=memory.dialogue,
            views=memory.views,
            scenes=memory.scenes,
            profiles=memory.profiles,
            episodic=memory.episodic,
            graph=memory.semantic,
            config=self.config.to_dict(),
            dimension=self.config.dimension,
        )
        self._loaded = None
        return BuildResult(
            views=len(memory.views),
            scenes=len(memory.scenes),
            characters=len(memory.scenes_by_character),
            phrases=len(memory.semantic.phrases),
            triples=len(memory.semantic.triples),
            path=str(path),
        )

    # -- query ----------------------------------------------------------

    def load(self) -> LoadedIndex:
        if self._loaded is None:
            self._loaded = load_container(self.index_dir, self.config.dimension)
        return self._loaded

    def query(
        self,
        question: str,
        mode: str = "fused",
        k: int | None = None,
        with_answer: bool = False,
    ) -> QueryTrace:
        if mode not in QUERY_MODES:
            raise SceneMemError(f"query mode must be one of {QUERY_MODES}, got {mode!r}")
        if not question.strip():
            raise SceneMemError("question is empty")
        k = k if k is not None else self.config.k
        loaded = self.load()
        embedder = make_embedder(self.config)
        provider = make_provider(self.config, loaded.dialogue, self.cache_dir)
        sem_result: SemanticResult | None = None
        epi_result: EpisodicResult | None = None
        if mode in ("fused", "semantic"):
            sem_result = semantic_retrieve(
                loaded.semantic,
                question,
                provider,
                embedder,
                k,
                damping=self.config.damping,
                tolerance=self.config.tolerance,
                max_iters=self.config.max_iters,
            )
        if mode in ("fused", "episodic"):
            cues = extract_cues(question, loaded.episodic, provider)
            epi_result = episodic_retrieve(loaded.episodic, question, embedder, k, cues)
        if mode == "fused":
            assert sem_result is not None and epi_result is not None
            sem = semantic_entries(sem_result)
            epi = scene_entries(epi_result)
            fused = fuse_slot3(sem, epi) if self.config.fusion == "slot3" else fuse(sem, epi)
        elif mode == "semantic":
            assert sem_result is not None
            fused = semantic_entries(sem_result)
        else:
            assert epi_result is not None
            fused = scene_entries(epi_result)
        answer: str | None = None
        if with_answer:
            answer = answer_question(
                question, fused, provider, main_speakers(loaded.dialogue), loaded.views
            )
        return QueryTrace(
            question=question,
            mode=mode,
            k=k,
            fused=tuple(fused),
            semantic=sem_result,
            episodic=epi_result,
            answer=answer,
        )

    # -- evaluate -------------------------------------------------------

    def evaluate(
        self,
        records: Sequence[Mapping] | Sequence[QAItem],
        repeats: int = 1,
        sweep: tuple[str, Sequence] | None = None,
        ablations: Sequence[str] = (),
        with_judge: bool = True,
    ) -> list[RunReport]:
        if records and isinstance(records[0], QAItem):
            items, skipped = list(records), 0
        else:
            items, skipped = load_questions(records)
        dialogue = self.load_dialogue()
        field_names = EngineConfig.field_names()

        def factory(snapshot: Mapping[str, object]):
            cfg = EngineConfig.load(
                file_values={k: v for k, v in snapshot.items() if k in field_names}
            )
            embedder = make_embedder(cfg)
            provider = make_provider(cfg, dialogue, self.cache_dir)
            memory = build_memory(dialogue, cfg, provider, embedder)
            speakers = main_speakers(dialogue)

            def pipeline(question: str) -> tuple[str, tuple[str, ...]]:
                sem_result = semantic_retrieve(
                    memory.semantic,
                    question,
                    provider,
                    embedder,
                    cfg.k,
                    damping=cfg.damping,
                    tolerance=cfg.tolerance,
                    max_iters=cfg.max_iters,
                )
                cues = extract_cues(question, memory.episodic, provider)
                epi_result = episodic_retrieve(memory.episodic, question, embedder, cfg.k, cues)
                sem = semantic_entries(sem_result)
                epi = scene_entries(epi_result)
                fused = fuse_slot3(sem, epi) if cfg.fusion == "slot3" else fuse(sem, epi)
                answer = answer_question(question, fused, provider, speakers, memory.views_by_id)
                return answer, tuple(e.id for e in fused)

            return pipeline

        judge_provider = (
            make_provider(self.config, dialogue, self.cache_dir) if with_judge else None
        )
        return run_benchmark(
            factory,
            base_config=self.config.to_dict(),
            items=items,
            judge_provider=judge_provider,
            repeats=repeats,
            sweep=sweep,
            ablations=ablations,
            skipped=skipped,
        )

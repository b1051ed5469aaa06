"""Semantic index: phrase/passage graph with personalized PageRank.

Offline, each passage (a view text) yields subject/predicate/object
triples. Subjects and objects become phrase nodes; each triple adds one
phrase-phrase edge and mention edges from both phrases to the source
passage; phrase pairs whose embeddings agree above the synonym threshold
are linked as synonyms. Passages are also embedded for dense retrieval.

Online, query phrases seed a personalized PageRank over the undirected
graph and passages are ranked by their PageRank mass, with dense cosine
score as tie-breaker. When no query phrase matches any phrase node the
ranking falls back to pure dense retrieval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import IndexStateError, ProviderError, SceneMemError
from .providers.base import AnnotationProvider, EmbeddingProvider

DEFAULT_SYNONYM_THRESHOLD = 0.8
DEFAULT_DAMPING = 0.85
DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITERS = 100


class GraphTriple(NamedTuple):
    subject: str
    predicate: str
    object: str
    source_passage: str


def normalize_phrase(text: str) -> str:
    return " ".join(text.split()).casefold()


@dataclass
class SemanticGraph:
    """Immutable after build. Node order: phrases first, then passages."""

    phrases: tuple[str, ...]
    phrase_matrix: np.ndarray
    passage_ids: tuple[str, ...]
    passage_texts: dict[str, str]
    passage_matrix: np.ndarray
    triples: tuple[GraphTriple, ...]
    triple_edges: frozenset[tuple[int, int]]
    mention_edges: frozenset[tuple[int, int]]
    synonym_edges: frozenset[tuple[int, int]]
    synonym_threshold: float

    @property
    def node_count(self) -> int:
        return len(self.phrases) + len(self.passage_ids)

    def passage_node(self, passage_index: int) -> int:
        return len(self.phrases) + passage_index

    def edges(self) -> frozenset[tuple[int, int]]:
        return self.triple_edges | self.mention_edges | self.synonym_edges


def synonym_pairs(phrase_matrix: np.ndarray, threshold: float) -> frozenset[tuple[int, int]]:
    """Unordered phrase index pairs with embedding cosine >= threshold."""
    n = phrase_matrix.shape[0]
    if n < 2:
        return frozenset()
    sims = phrase_matrix @ phrase_matrix.T
    pairs = set()
    for i in range(n):
        for j in range(i + 1, n):
            if sims[i, j] >= threshold:
                pairs.add((i, j))
    return frozenset(pairs)


def assemble_graph(
    phrases: tuple[str, ...],
    phrase_matrix: np.ndarray,
    passage_ids: tuple[str, ...],
    passage_texts: dict[str, str],
    passage_matrix: np.ndarray,
    triples: tuple[GraphTriple, ...],
    synonym_threshold: float,
) -> SemanticGraph:
    """Derive the edge sets from triples and synonym similarities.

    Shared by the builder and the container loader so a persisted graph
    reconstructs the exact same structure.
    """
    phrase_index = {p: i for i, p in enumerate(phrases)}
    passage_position = {pid: i for i, pid in enumerate(passage_ids)}
    triple_edges: set[tuple[int, int]] = set()
    mention_edges: set[tuple[int, int]] = set()
    for t in triples:
        if t.subject not in phrase_index or t.object not in phrase_index:
            raise IndexStateError(f"triple references unknown phrase: {t}")
        if t.source_passage not in passage_position:
            raise IndexStateError(f"triple references unknown passage: {t}")
        si, oi = phrase_index[t.subject], phrase_index[t.object]
        node = len(phrases) + passage_position[t.source_passage]
        if si != oi:
            triple_edges.add((min(si, oi), max(si, oi)))
        mention_edges.add((si, node))
        mention_edges.add((oi, node))
    return SemanticGraph(
        phrases=phrases,
        phrase_matrix=phrase_matrix,
        passage_ids=passage_ids,
        passage_texts=passage_texts,
        passage_matrix=passage_matrix,
        triples=triples,
        triple_edges=frozenset(triple_edges),
        mention_edges=frozenset(mention_edges),
        synonym_edges=synonym_pairs(phrase_matrix, synonym_threshold),
        synonym_threshold=synonym_threshold,
    )


def build_semantic_index(
    passages: Sequence[tuple[str, str]],
    provider: AnnotationProvider,
    embedder: EmbeddingProvider,
    synonym_threshold: float = DEFAULT_SYNONYM_THRESHOLD,
) -> SemanticGraph:
    """Extract triples per passage and assemble the graph.

    ``passages`` is an ordered sequence of (passage id, text); ids must be
    unique. Triples with an empty part after normalization are dropped
    (provider output is untrusted).
    """
    if not passages:
        raise SceneMemError("cannot build a semantic index from zero passages")
    ids = [pid for pid, _ in passages]
    if len(set(ids)) != len(ids):
        raise IndexStateError("duplicate passage ids")

    phrase_order: dict[str, None] = {}
    triples: list[GraphTriple] = []
    passage_vectors: list[tuple[float, ...]] = []
    for pid, text in passages:
        try:
            passage_vectors.append(embedder.embed(text))
            raw_triples = provider.extract_triples(text)
        except ProviderError as exc:
            exc.item_id = exc.item_id or pid
            raise
        for t in raw_triples:
            s = normalize_phrase(t.subject)
            p = normalize_phrase(t.predicate)
            o = normalize_phrase(t.object)
            if not (s and p and o):
                continue
            triples.append(GraphTriple(s, p, o, pid))
            phrase_order.setdefault(s)
            phrase_order.setdefault(o)

    phrases = tuple(phrase_order)
    if phrases:
        phrase_matrix = np.array([embedder.embed(p) for p in phrases], dtype=np.float64)
    else:
        phrase_matrix = np.zeros((0, 0), dtype=np.float64)
    return assemble_graph(
        phrases=phrases,
        phrase_matrix=phrase_matrix,
        passage_ids=tuple(ids),
        passage_texts=dict(passages),
        passage_matrix=np.array(passage_vectors, dtype=np.float64),
        triples=tuple(triples),
        synonym_threshold=synonym_threshold,
    )


def transition_matrix(graph: SemanticGraph) -> np.ndarray:
    """Column-stochastic random-walk matrix over the undirected graph.

    Columns of isolated nodes stay zero; ppr_scores reassigns that
    dangling mass to the restart distribution.
    """
    n = graph.node_count
    adj = np.zeros((n, n), dtype=np.float64)
    for i, j in graph.edges():
        adj[i, j] = 1.0
        adj[j, i] = 1.0
    degrees = adj.sum(axis=0)
    nonzero = degrees > 0
    adj[:, nonzero] /= degrees[nonzero]
    return adj


def ppr_scores(
    transition: np.ndarray,
    seeds: Sequence[int],
    damping: float = DEFAULT_DAMPING,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> np.ndarray:
    """Personalized PageRank by power iteration.

    Restart distribution is uniform over the seed nodes. Mass leaving a
    dangling (degree-zero) node is routed back to the restart vector, so
    every iterate sums to exactly 1.
    """
    n = transition.shape[0]
    if not seeds:
        raise SceneMemError("personalized PageRank needs at least one seed node")
    restart = np.zeros(n, dtype=np.float64)
    restart[list(seeds)] = 1.0 / len(set(seeds))
    dangling = transition.sum(axis=0) == 0
    p = restart.copy()
    for _ in range(max_iters):
        dangling_mass = p[dangling].sum()
        nxt = damping * (transition @ p + dangling_mass * restart) + (1.0 - damping) * restart
        if np.abs(nxt - p).sum() < tolerance:
            p = nxt
            break
        p = nxt
    return p


@dataclass(frozen=True)
class RetrievedPassage:
    id: str
    text: str
    score: float
    dense_score: float


@dataclass(frozen=True)
class SemanticResult:
    passages: tuple[RetrievedPassage, ...]
    seeds: tuple[str, ...] = ()
    fallback: bool = False

    @property
    def passage_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.passages)


def query_phrases(query: str, provider: AnnotationProvider) -> tuple[str, ...]:
    """Candidate phrases for seeding: named participants plus the topic."""
    candidates = [normalize_phrase(p) for p in provider.extract_participants(query)]
    topic = normalize_phrase(provider.extract_topic(query))
    if topic:
        candidates.append(topic)
    return tuple(dict.fromkeys(c for c in candidates if c))


def match_seeds(
    graph: SemanticGraph, phrases: Iterable[str], embedder: EmbeddingProvider
) -> tuple[int, ...]:
    """Map query phrases to phrase nodes.

    Exact normalized match wins; otherwise the nearest phrase node by
    embedding qualifies when its similarity clears the synonym threshold.
    """
    if not graph.phrases:
        return ()
    index = {p: i for i, p in enumerate(graph.phrases)}
    seeds: list[int] = []
    for phrase in phrases:
        if phrase in index:
            seeds.append(index[phrase])
            continue
        try:
            vec = np.array(embedder.embed(phrase), dtype=np.float64)
        except ProviderError:
            continue
        sims = graph.phrase_matrix @ vec
        best = int(np.argmax(sims))
        if sims[best] >= graph.synonym_threshold:
            seeds.append(best)
    return tuple(dict.fromkeys(seeds))


def dense_rank(graph: SemanticGraph, query_vec: np.ndarray) -> list[int]:
    """Passage positions by descending cosine, ties by passage id."""
    scores = graph.passage_matrix @ query_vec
    return sorted(range(len(graph.passage_ids)), key=lambda i: (-scores[i], graph.passage_ids[i]))


def semantic_retrieve(
    graph: SemanticGraph,
    query: str,
    provider: AnnotationProvider,
    embedder: EmbeddingProvider,
    k: int,
    damping: float = DEFAULT_DAMPING,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> SemanticResult:
    """Rank passages by seeded PageRank, falling back to dense retrieval."""
    if not query.strip():
        raise SceneMemError("semantic query is empty")
    if k < 1:
        raise SceneMemError(f"k must be >= 1, got {k}")
    query_vec = np.array(embedder.embed(query), dtype=np.float64)
    if query_vec.shape[0] != graph.passage_matrix.shape[1]:
        raise IndexStateError(
            f"query embedding dimension {query_vec.shape[0]} does not match "
            f"index {graph.passage_matrix.shape[1]}"
        )
    dense_scores = graph.passage_matrix @ query_vec
    phrases = query_phrases(query, provider)
    seeds = match_seeds(graph, phrases, embedder)
    if not seeds:
        order = dense_rank(graph, query_vec)
        return SemanticResult(
            passages=tuple(
                RetrievedPassage(
                    id=graph.passage_ids[i],
                    text=graph.passage_texts[graph.passage_ids[i]],
                    score=float(dense_scores[i]),
                    dense_score=float(dense_scores[i]),
                )
                for i in order[:k]
            ),
            fallback=True,
        )
    mass = ppr_scores(transition_matrix(graph), seeds, damping, tolerance, max_iters)
    offset = len(graph.phrases)
    order = sorted(
        range(len(graph.passage_ids)),
        key=lambda i: (-mass[offset + i], -dense_scores[i], graph.passage_ids[i]),
    )
    return SemanticResult(
        passages=tuple(
            RetrievedPassage(
                id=graph.passage_ids[i],
                text=graph.passage_texts[graph.passage_ids[i]],
                score=float(mass[offset + i]),
                dense_score=float(dense_scores[i]),
            )
            for i in order[:k]
        ),
        seeds=tuple(graph.phrases[s] for s in seeds),
    )

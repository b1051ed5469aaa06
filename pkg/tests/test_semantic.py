"""Phrase/passage graph construction and personalized PageRank retrieval."""

from __future__ import annotations

import numpy as np
import pytest

from oracles import closed_form_three_node, oracle_ppr

from scenemem.errors import IndexStateError, SceneMemError
from scenemem.providers.base import Triple
from scenemem.providers.reference import ReferenceEmbedder, ReferenceProvider
from scenemem.semantic import (
    GraphTriple,
    SemanticGraph,
    build_semantic_index,
    dense_rank,
    match_seeds,
    normalize_phrase,
    ppr_scores,
    query_phrases,
    semantic_retrieve,
    synonym_pairs,
    transition_matrix,
)

DUET_PHRASES = (
    "caroline",
    "results from the dance competition are finally in",
    "melanie",
    "the team really earned first place last night",
    "told me they won with a contemporary piece called finding freedom",
    "gina",
    "me they won with a contemporary piece called finding freedom",
    "cafe has the best pastries in town",
    "the espresso here is wonderful too",
)


class ScriptedTripleProvider:
    """Returns a fixed triple list per passage text."""

    def __init__(self, script: dict[str, list[Triple]]):
        self.script = script

    def extract_triples(self, passage: str) -> list[Triple]:
        return list(self.script.get(passage, []))


@pytest.fixture
def tiny_graph(embedder):
    provider = ReferenceProvider(lexicon=("Gina",))
    return build_semantic_index([("p1", "Gina won first place")], provider, embedder)


class TestNormalizePhrase:
    def test_collapses_whitespace_and_case(self):
        assert normalize_phrase("  First   PLACE \n") == "first place"

    def test_empty_stays_empty(self):
        assert normalize_phrase("   ") == ""


class TestGraphConstruction:
    def test_tiny_passage_yields_two_phrases_and_three_nodes(self, tiny_graph):
        assert tiny_graph.phrases == ("gina", "first place")
        assert tiny_graph.passage_ids == ("p1",)
        assert tiny_graph.node_count == 3
        assert tiny_graph.passage_node(0) == 2

    def test_tiny_passage_edges(self, tiny_graph):
        assert tiny_graph.triple_edges == frozenset({(0, 1)})
        assert tiny_graph.mention_edges == frozenset({(0, 2), (1, 2)})
        assert tiny_graph.synonym_edges == frozenset()

    def test_duet_graph_counts(self, duet_memory):
        graph = duet_memory.semantic
        assert len(graph.passage_ids) == 5
        assert len(graph.triples) == 13
        assert graph.phrases == DUET_PHRASES

    def test_duet_mention_edges_touch_source_passages(self, duet_memory):
        graph = duet_memory.semantic
        caroline = graph.phrases.index("caroline")
        first_passage_node = graph.passage_node(graph.passage_ids.index("s1:0"))
        assert (caroline, first_passage_node) in graph.mention_edges

    def test_shared_phrases_are_deduplicated(self, embedder):
        provider = ReferenceProvider(lexicon=("Gina",))
        graph = build_semantic_index(
            [("p1", "Gina won first place"), ("p2", "Gina won first place")],
            provider,
            embedder,
        )
        assert graph.phrases == ("gina", "first place")
        assert graph.phrase_matrix.shape[0] == 2
        assert len(graph.triples) == 2

    def test_self_referencing_triple_adds_no_phrase_edge(self, embedder):
        provider = ScriptedTripleProvider({"loop": [Triple("alpha", "rel", "alpha")]})
        graph = build_semantic_index([("p1", "loop")], provider, embedder)
        assert graph.phrases == ("alpha",)
        assert graph.triple_edges == frozenset()
        assert graph.mention_edges == frozenset({(0, 1)})

    def test_triples_with_blank_parts_are_dropped(self, embedder):
        provider = ScriptedTripleProvider(
            {
                "text": [
                    Triple("", "rel", "thing"),
                    Triple("alpha", "   ", "thing"),
                    Triple("alpha", "rel", ""),
                    Triple("alpha", "rel", "kept object"),
                ]
            }
        )
        graph = build_semantic_index([("p1", "text")], provider, embedder)
        assert graph.triples == (GraphTriple("alpha", "rel", "kept object", "p1"),)

    def test_similar_phrases_get_synonym_edges(self, embedder):
        provider = ScriptedTripleProvider(
            {
                "one": [Triple("alpha beta gamma delta", "rel", "zeta eta")],
                "two": [Triple("alpha beta gamma", "rel", "theta iota")],
            }
        )
        graph = build_semantic_index([("p1", "one"), ("p2", "two")], provider, embedder)
        long_form = graph.phrases.index("alpha beta gamma delta")
        short_form = graph.phrases.index("alpha beta gamma")
        pair = (min(long_form, short_form), max(long_form, short_form))
        assert pair in graph.synonym_edges
        assert len(graph.synonym_edges) == 1

    def test_synonym_pairs_respect_threshold(self):
        matrix = np.array([[1.0, 0.0], [0.6, 0.8]])
        assert synonym_pairs(matrix, 0.5) == frozenset({(0, 1)})
        assert synonym_pairs(matrix, 0.7) == frozenset()

    def test_empty_passage_list_rejected(self, embedder):
        with pytest.raises(SceneMemError, match="zero passages"):
            build_semantic_index([], ReferenceProvider(), embedder)

    def test_duplicate_passage_ids_rejected(self, embedder):
        with pytest.raises(IndexStateError, match="duplicate passage ids"):
            build_semantic_index(
                [("p1", "aa bb"), ("p1", "cc dd")], ReferenceProvider(), embedder
            )

    def test_no_lexicon_means_no_triples(self, embedder):
        graph = build_semantic_index(
            [("p1", "Gina won first place")], ReferenceProvider(lexicon=()), embedder
        )
        assert graph.phrases == ()
        assert graph.triples == ()


class TestTransitionMatrix:
    def test_columns_are_stochastic_or_zero(self, duet_memory):
        matrix = transition_matrix(duet_memory.semantic)
        sums = matrix.sum(axis=0)
        for total in sums:
            assert total == pytest.approx(1.0, abs=1e-12) or total == 0.0

    def test_tiny_graph_walk_matrix(self, tiny_graph):
        matrix = transition_matrix(tiny_graph)
        # gina <-> first place <-> p1 plus gina <-> p1: every node degree 2
        assert matrix.shape == (3, 3)
        assert matrix.sum(axis=0) == pytest.approx((1.0, 1.0, 1.0))

    def test_isolated_node_column_stays_zero(self, embedder):
        provider = ScriptedTripleProvider({"linked": [Triple("alpha", "rel", "alpha")]})
        graph = build_semantic_index(
            [("p1", "linked"), ("p2", "isolated text")], provider, embedder
        )
        matrix = transition_matrix(graph)
        assert matrix[:, 2].sum() == 0.0


class TestPageRank:
    def three_node_transition(self):
        return np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

    def test_scores_sum_to_one(self):
        p = ppr_scores(self.three_node_transition(), [0])
        assert p.sum() == pytest.approx(1.0, abs=1e-9)

    def test_matches_closed_form_solution(self):
        p = ppr_scores(self.three_node_transition(), [0], damping=0.85, tolerance=1e-9)
        expected = closed_form_three_node(0.85)
        assert p == pytest.approx(expected, abs=1e-6)

    def test_matches_linear_solve_on_duet_graph(self, duet_memory):
        graph = duet_memory.semantic
        matrix = transition_matrix(graph)
        seeds = [graph.phrases.index("gina")]
        iterated = ppr_scores(matrix, seeds, tolerance=1e-12)
        solved = oracle_ppr(matrix, seeds, 0.85)
        assert iterated == pytest.approx(solved, abs=1e-9)
        assert iterated.sum() == pytest.approx(1.0, abs=1e-9)

    def test_dangling_mass_returns_to_seeds(self):
        # Both nodes isolated: all mass keeps restarting at the seed.
        p = ppr_scores(np.zeros((2, 2)), [0], tolerance=1e-12)
        assert p == pytest.approx((1.0, 0.0))

    def test_multiple_seeds_share_restart_mass(self):
        p = ppr_scores(np.zeros((3, 3)), [0, 2], tolerance=1e-12)
        assert p == pytest.approx((0.5, 0.0, 0.5))

    def test_no_seeds_rejected(self):
        with pytest.raises(SceneMemError, match="seed"):
            ppr_scores(self.three_node_transition(), [])


class TestSeeding:
    def test_query_phrases_combine_names_and_topic(self, duet_provider):
        phrases = query_phrases("What did Gina win at the dance competition?", duet_provider)
        assert phrases == ("gina", "gina win")

    def test_exact_phrase_match_wins(self, tiny_graph, embedder):
        assert match_seeds(tiny_graph, ["gina"], embedder) == (0,)

    def test_near_phrase_matches_by_embedding(self, tiny_graph, embedder):
        seeds = match_seeds(tiny_graph, ["first place finish"], embedder)
        assert seeds == (1,)

    def test_distant_phrase_matches_nothing(self, tiny_graph, embedder):
        assert match_seeds(tiny_graph, ["completely unrelated chatter"], embedder) == ()

    def test_unembeddable_phrase_is_skipped(self, tiny_graph, embedder):
        assert match_seeds(tiny_graph, ["..."], embedder) == ()

    def test_duplicate_seed_nodes_collapse(self, tiny_graph, embedder):
        assert match_seeds(tiny_graph, ["gina", "gina"], embedder) == (0,)

    def test_empty_graph_has_no_seeds(self, embedder):
        graph = build_semantic_index(
            [("p1", "plain words")], ReferenceProvider(lexicon=()), embedder
        )
        assert match_seeds(graph, ["plain words"], embedder) == ()


class TestRetrieve:
    @pytest.fixture
    def weather_graph(self, embedder):
        provider = ReferenceProvider(lexicon=("Gina",))
        passages = [
            ("p1", "Gina won first place"),
            ("p2", "cold weather today"),
            ("p3", "first snow today"),
        ]
        return build_semantic_index(passages, provider, embedder), provider

    def test_seeded_query_ranks_linked_passage_first(self, weather_graph, embedder):
        graph, provider = weather_graph
        result = semantic_retrieve(graph, "Gina first place", provider, embedder, k=3)
        assert result.passage_ids[0] == "p1"
        assert result.fallback is False
        assert result.seeds == ("gina",)

    def test_zero_mass_ties_break_by_dense_then_id(self, weather_graph, embedder):
        graph, provider = weather_graph
        result = semantic_retrieve(graph, "Gina first place", provider, embedder, k=3)
        assert result.passage_ids == ("p1", "p3", "p2")
        assert result.passages[1].score == result.passages[2].score == 0.0
        assert result.passages[1].dense_score > result.passages[2].dense_score

    def test_k_truncates_ranking(self, weather_graph, embedder):
        graph, provider = weather_graph
        result = semantic_retrieve(graph, "Gina first place", provider, embedder, k=1)
        assert result.passage_ids == ("p1",)

    def test_unseeded_query_falls_back_to_dense(self, weather_graph, embedder):
        graph, provider = weather_graph
        result = semantic_retrieve(graph, "umbrella factory tour", provider, embedder, k=3)
        assert result.fallback is True
        assert result.seeds == ()

    def test_tripleless_graph_equals_dense_ranking(self, embedder):
        provider = ReferenceProvider(lexicon=())
        passages = [
            ("a", "red apples in the orchard"),
            ("b", "green pears by the gate"),
            ("c", "apples and pears together"),
        ]
        graph = build_semantic_index(passages, provider, embedder)
        for query in ("apples", "pears by the gate", "orchard gate"):
            result = semantic_retrieve(graph, query, provider, embedder, k=3)
            vec = np.array(embedder.embed(query))
            expected = [graph.passage_ids[i] for i in dense_rank(graph, vec)[:3]]
            assert result.fallback is True
            assert list(result.passage_ids) == expected

    def test_dense_scores_reported_alongside_mass(self, weather_graph, embedder):
        graph, provider = weather_graph
        result = semantic_retrieve(graph, "Gina first place", provider, embedder, k=3)
        vec = np.array(embedder.embed("Gina first place"))
        top = result.passages[0]
        position = graph.passage_ids.index(top.id)
        assert top.dense_score == pytest.approx(float(graph.passage_matrix[position] @ vec))

    def test_duet_question_finds_the_announcement_view(self, duet_memory, duet_provider, embedder):
        result = semantic_retrieve(
            duet_memory.semantic,
            "Who told Caroline about Finding Freedom?",
            duet_provider,
            embedder,
            k=3,
        )
        assert result.fallback is False
        assert set(result.passage_ids) & {"s1:1", "s1:2"}

    def test_empty_query_rejected(self, tiny_graph, embedder):
        with pytest.raises(SceneMemError, match="empty"):
            semantic_retrieve(tiny_graph, "  ", ReferenceProvider(), embedder, k=2)

    def test_nonpositive_k_rejected(self, tiny_graph, embedder):
        with pytest.raises(SceneMemError, match="k must be >= 1"):
            semantic_retrieve(tiny_graph, "gina", ReferenceProvider(), embedder, k=0)

    def test_dimension_mismatch_rejected(self, tiny_graph):
        with pytest.raises(IndexStateError, match="does not match"):
            semantic_retrieve(tiny_graph, "gina", ReferenceProvider(), ReferenceEmbedder(16), k=2)

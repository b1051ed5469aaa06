"""Window construction: one view per message, clamped, session-bounded."""

from __future__ import annotations

import json

import pytest

from scenemem.dialogue import parse_dialogue
from scenemem.views import build_views

from conftest import duet_corpus_bytes


@pytest.fixture
def duet_views(duet_dialogue):
    return build_views(duet_dialogue, w=1)


class TestWindowing:
    def test_one_view_per_message(self, duet_dialogue, duet_views):
        assert len(duet_views) == len(duet_dialogue.messages)
        assert [v.id for v in duet_views] == [m.id for m in duet_dialogue.messages]

    def test_first_message_clamps_left(self, duet_views):
        assert duet_views[0].member_ids == ("s1:0", "s1:1")

    def test_interior_message_takes_both_neighbors(self, duet_views):
        assert duet_views[1].member_ids == ("s1:0", "s1:1", "s1:2")

    def test_last_message_clamps_right(self, duet_views):
        assert duet_views[2].member_ids == ("s1:1", "s1:2")

    def test_windows_never_cross_sessions(self, duet_views):
        assert duet_views[3].member_ids == ("s2:0", "s2:1")
        assert duet_views[4].member_ids == ("s2:0", "s2:1")

    def test_member_count_bounded_by_window(self, duet_dialogue):
        for w in range(4):
            for view in build_views(duet_dialogue, w):
                assert len(view.member_ids) <= 2 * w + 1

    def test_members_deduplicated_and_contiguous(self, duet_dialogue):
        for view in build_views(duet_dialogue, w=3):
            assert len(set(view.member_ids)) == len(view.member_ids)

    def test_wider_windows_contain_narrower_ones(self, duet_dialogue):
        narrow = {v.id: set(v.member_ids) for v in build_views(duet_dialogue, w=1)}
        wide = {v.id: set(v.member_ids) for v in build_views(duet_dialogue, w=2)}
        for view_id, members in narrow.items():
            assert members <= wide[view_id]

    def test_zero_window_is_the_center_alone(self, duet_dialogue):
        views = build_views(duet_dialogue, w=0)
        assert all(v.member_ids == (v.id,) for v in views)
        assert views[0].text == "Caroline: The results from the dance competition are finally in."

    def test_negative_window_rejected(self, duet_dialogue):
        with pytest.raises(ValueError, match=">= 0"):
            build_views(duet_dialogue, w=-1)


class TestViewFields:
    def test_time_and_location_come_from_the_center(self, duet_dialogue, duet_views):
        for view, message in zip(duet_views, duet_dialogue.messages):
            assert view.center_id == message.id
            assert view.time == message.timestamp
            assert view.location == message.location

    def test_text_is_speaker_prefixed_lines_in_order(self, duet_views):
        assert duet_views[1].text == (
            "Caroline: The results from the dance competition are finally in.\n"
            "Melanie: Amazing, the team really earned first place last night.\n"
            "Caroline: Gina told me they won with a contemporary piece called Finding Freedom."
        )

    def test_member_speakers_parallel_member_ids(self, duet_views):
        assert duet_views[1].member_speakers == ("caroline", "melanie", "caroline")

    def test_views_start_unannotated(self, duet_views):
        assert not duet_views[0].annotated
        annotated = duet_views[0].with_annotations(
            frozenset({"caroline"}), "dance", (1.0, 0.0)
        )
        assert annotated.annotated
        assert duet_views[0].topic == ""

    def test_adjacent_centers_can_share_member_sets(self):
        doc = json.loads(duet_corpus_bytes())
        views = build_views(parse_dialogue(json.dumps(doc), "canonical"), w=1)
        assert views[3].member_ids == views[4].member_ids
        assert views[3].id != views[4].id

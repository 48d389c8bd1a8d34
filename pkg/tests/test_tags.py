import random

import pytest
from hypothesis import given, settings, strategies as st

from csrl.dialogue import (
    CsrlError,
    DialogueSession,
    Frame,
    Span,
    Utterance,
    flatten,
    flat_index,
)
from csrl.tags import (
    decode_tags,
    encode_frame,
    encode_mentions,
    decode_mention_tags,
    label_vocabulary,
    split_label,
)
from csrl.synthetic import random_session


def two_turn_session(frames=()):
    return DialogueSession(
        "demo",
        [
            Utterance("A", ["需要", "粤语"]),
            Utterance("B", ["粤语", "是", "普通话", "吗"]),
        ],
        frames,
    )


class TestLabelVocabulary:
    def test_size_and_order(self):
        vocab = label_vocabulary()
        assert len(vocab) == 19
        assert vocab[0] == "O"
        assert vocab[1:3] == ["B-ARG0", "I-ARG0"]
        assert vocab[-2:] == ["B-AM-NEG", "I-AM-NEG"]

    def test_duplicate_free(self):
        vocab = label_vocabulary()
        assert len(set(vocab)) == len(vocab)

    def test_split_label(self):
        assert split_label("O") == ("O", None)
        assert split_label("B-AM-TMP") == ("B", "AM-TMP")
        with pytest.raises(ValueError):
            split_label("X-ARG0")


class TestEncodeFrame:
    def test_single_token_argument(self):
        frame = Frame(Span(1, 3, 4), [("ARG0", Span(1, 0, 1))])
        flat = flatten(two_turn_session())
        tags = encode_frame(flat, frame)
        assert tags[4] == "B-ARG0"
        assert all(t == "O" for i, t in enumerate(tags) if i != 4)

    def test_multi_token_argument(self):
        frame = Frame(Span(1, 3, 4), [("ARG1", Span(1, 0, 3))])
        tags = encode_frame(flatten(two_turn_session()), frame)
        assert tags[4:7] == ["B-ARG1", "I-ARG1", "I-ARG1"]

    def test_predicate_positions_stay_o(self):
        frame = Frame(Span(1, 3, 4), [("ARG0", Span(1, 0, 1))])
        tags = encode_frame(flatten(two_turn_session()), frame)
        assert tags[7] == "O"

    def test_marker_argument(self):
        frame = Frame(Span(1, 3, 4), [("ARG0", Span(0, 0, 0, True))])
        tags = encode_frame(flatten(two_turn_session()), frame)
        assert tags[0] == "B-ARG0"

    def test_no_arguments_all_o(self):
        frame = Frame(Span(1, 3, 4), [])
        tags = encode_frame(flatten(two_turn_session()), frame)
        assert set(tags) == {"O"}

    def test_overlap_error_names_both_roles(self):
        frame = Frame(
            Span(1, 3, 4), [("ARG0", Span(1, 0, 2)), ("ARG1", Span(1, 1, 3))]
        )
        with pytest.raises(CsrlError, match="ARG0.*ARG1"):
            encode_frame(flatten(two_turn_session()), frame)

    def test_duplicate_role_error(self):
        frame = Frame(
            Span(1, 3, 4), [("ARG0", Span(0, 0, 1)), ("ARG0", Span(0, 1, 2))]
        )
        with pytest.raises(CsrlError, match="twice"):
            encode_frame(flatten(two_turn_session()), frame)


class TestDecodeTags:
    def test_simple_run(self):
        flat = flatten(DialogueSession("s", [Utterance("A", ["a", "b", "c"])]))
        decoded = decode_tags(["O", "B-ARG1", "I-ARG1", "O"], flat)
        assert decoded == [("ARG1", Span(0, 0, 2))]

    def test_stray_i_promoted_to_b(self):
        flat = flatten(DialogueSession("s", [Utterance("A", ["a", "b", "c"])]))
        decoded = decode_tags(["I-ARG0", "O", "O", "O"], flat)
        assert decoded == [("ARG0", Span(0, 0, 0, is_speaker_marker=True))]
        decoded = decode_tags(["O", "I-ARG0", "O", "O"], flat)
        assert decoded == [("ARG0", Span(0, 0, 1))]

    def test_role_switch_starts_new_span(self):
        flat = flatten(DialogueSession("s", [Utterance("A", ["a", "b", "c"])]))
        decoded = decode_tags(["O", "B-ARG0", "I-ARG1", "O"], flat)
        assert decoded == [("ARG0", Span(0, 0, 1)), ("ARG1", Span(0, 1, 2))]

    def test_run_split_at_turn_boundary(self):
        flat = flatten(two_turn_session())
        tags = ["O", "O", "B-ARG0", "I-ARG0", "I-ARG0", "O", "O", "O"]
        decoded = decode_tags(tags, flat)
        assert (("ARG0", Span(0, 1, 2))) in decoded
        # the boundary splits the run at the marker, which becomes its own span
        assert ("ARG0", Span(1, 0, 0, True)) in decoded

    def test_marker_token_mixture_split(self):
        flat = flatten(two_turn_session())
        tags = ["B-ARG1", "I-ARG1", "O", "O", "O", "O", "O", "O"]
        decoded = decode_tags(tags, flat)
        assert decoded == [
            ("ARG1", Span(0, 0, 0, True)),
            ("ARG1", Span(0, 0, 1)),
        ]

    def test_length_mismatch(self):
        flat = flatten(two_turn_session())
        with pytest.raises(ValueError):
            decode_tags(["O"], flat)

    def test_round_trip_random_frames(self):
        rng = random.Random(11)
        for _ in range(400):
            session = random_session(rng, "s")
            flat = flatten(session)
            for frame in session.frames:
                tags = encode_frame(flat, frame)
                decoded = decode_tags(tags, flat)
                assert set(decoded) == set(frame.arguments)


class TestEncodeMentions:
    def test_basic(self):
        flat = flatten(two_turn_session())
        tags = encode_mentions(flat, [Span(1, 0, 3)])
        assert tags[4:7] == ["B", "I", "I"]
        assert set(tags[:4]) == {"O"} and set(tags[7:]) == {"O"}

    def test_empty(self):
        flat = flatten(two_turn_session())
        assert set(encode_mentions(flat, [])) == {"O"}

    def test_overlap_keeps_longer(self):
        flat = flatten(two_turn_session())
        tags = encode_mentions(flat, [Span(1, 1, 3), Span(1, 0, 3)])
        assert tags[4:7] == ["B", "I", "I"]
        assert tags.count("B") == 1

    def test_tie_keeps_earlier(self):
        flat = flatten(two_turn_session())
        tags = encode_mentions(flat, [Span(1, 1, 3), Span(1, 0, 2)])
        assert tags[4] == "B" and tags[5] == "I"
        assert tags[6] == "O"

    def test_mention_round_trip(self):
        flat = flatten(two_turn_session())
        spans = [Span(1, 0, 2), Span(0, 0, 1)]
        decoded = decode_mention_tags(encode_mentions(flat, spans), flat)
        assert set(decoded) == set(spans)


@st.composite
def session_and_frame(draw):
    rng = random.Random(draw(st.integers(0, 10**6)))
    session = random_session(rng, "h", max_frames=1)
    if not session.frames:
        session = DialogueSession(
            session.session_id,
            session.utterances,
            [Frame(Span(0, 0, 1), [])],
            session.mentions,
        )
    return session


@given(session_and_frame())
@settings(max_examples=300, deadline=None)
def test_decode_properties(session):
    flat = flatten(session)
    frame = session.frames[0]
    decoded = decode_tags(encode_frame(flat, frame), flat)
    assert set(decoded) == set(frame.arguments)
    for _, span in decoded:
        start, end = flat_index(flat, span)  # round-trips → valid span
        assert 0 <= start < end <= len(flat)

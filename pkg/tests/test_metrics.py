import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from csrl.dialogue import DialogueSession, Frame, Span, Utterance
from csrl.metrics import (
    ArgTuple,
    bleu,
    distinct_n,
    exact_match,
    f1_report,
    frames_to_tuples,
    generation_report,
    gold_tuples,
    rouge,
)

from helpers import oracle_f1_report, random_gold_pred


def session_with_frames():
    return DialogueSession(
        "s1",
        [Utterance("A", ["a", "b"]), Utterance("B", ["c", "d", "e"])],
        [
            Frame(
                Span(1, 1, 2),
                [("ARG0", Span(1, 0, 1)), ("ARG1", Span(0, 0, 2))],
            )
        ],
    )


class TestFramesToTuples:
    def test_one_tuple_per_argument(self):
        session = session_with_frames()
        tuples = gold_tuples([session])
        assert len(tuples) == 2
        localities = {t.role: t.locality for t in tuples}
        assert localities == {"ARG0": "intra", "ARG1": "cross"}

    def test_duplicates_collapse(self):
        session = session_with_frames()
        frame = session.frames[0]
        tuples = frames_to_tuples([session], {"s1": [frame, frame]})
        assert len(tuples) == 2

    def test_dangling_session(self):
        session = session_with_frames()
        with pytest.raises(KeyError):
            frames_to_tuples([session], {"nope": []})

    def test_partition_matches_brute_force(self):
        from csrl.synthetic import random_corpus

        corpus = random_corpus(9, 30)
        tuples = gold_tuples(corpus)
        brute_intra = sum(
            1
            for s in corpus
            for f in s.frames
            for _, sp in f.arguments
            if sp.turn == f.predicate.turn
        )
        brute_cross = sum(len(f.arguments) for s in corpus for f in s.frames) - brute_intra
        # set semantics may collapse duplicates; this corpus has none
        assert sum(1 for t in tuples if t.locality == "intra") == brute_intra
        assert sum(1 for t in tuples if t.locality == "cross") == brute_cross


class TestF1Report:
    def test_perfect(self):
        gold, _ = random_gold_pred(random.Random(0))
        report = f1_report(gold, gold)
        for split in (report.all, report.intra, report.cross):
            if split.gold:
                assert split.precision == split.recall == split.f1 == 1.0

    def test_hand_counts(self):
        a = ArgTuple("s", (0, 1), (2, 3), "ARG0", "intra")
        b = ArgTuple("s", (0, 1), (4, 5), "ARG1", "intra")
        report = f1_report({a, b}, {a})
        assert report.all.precision == 1.0
        assert report.all.recall == 0.5
        assert report.all.f1 == pytest.approx(2 / 3)
        assert (report.all.gold, report.all.pred, report.all.correct) == (2, 1, 1)

    def test_degenerate_cross_split(self):
        a = ArgTuple("s", (0, 1), (2, 3), "ARG0", "intra")
        report = f1_report({a}, {a})
        assert report.cross.f1 == 0.0
        assert (report.cross.gold, report.cross.pred, report.cross.correct) == (0, 0, 0)

    def test_empty_pred(self):
        a = ArgTuple("s", (0, 1), (2, 3), "ARG0", "intra")
        report = f1_report({a}, set())
        assert report.all.precision == 0.0
        assert report.all.recall == 0.0
        assert report.all.f1 == 0.0

    def test_gold_total_is_intra_plus_cross(self):
        rng = random.Random(3)
        for _ in range(50):
            gold, pred = random_gold_pred(rng)
            report = f1_report(gold, pred)
            assert report.all.gold == report.intra.gold + report.cross.gold

    def test_matches_oracle(self):
        rng = random.Random(4)
        for _ in range(200):
            gold, pred = random_gold_pred(rng)
            assert f1_report(gold, pred) == oracle_f1_report(gold, pred)

    def test_symmetry_swaps_p_and_r(self):
        rng = random.Random(5)
        for _ in range(50):
            gold, pred = random_gold_pred(rng)
            fwd, rev = f1_report(gold, pred), f1_report(pred, gold)
            assert fwd.all.precision == rev.all.recall
            assert fwd.all.recall == rev.all.precision
            assert fwd.all.f1 == rev.all.f1


class TestBleu:
    def test_identical(self):
        scores = bleu([["a", "b", "c"]], [["a", "b", "c"]], max_n=2)
        assert scores[1] == pytest.approx(1.0)
        assert scores[2] == pytest.approx(1.0)

    def test_hand_case(self):
        scores = bleu([["a", "b", "x", "d"]], [["a", "b", "c", "d"]], max_n=2)
        assert scores[1] == pytest.approx(3 / 4)
        assert scores[2] == pytest.approx(math.sqrt(3 / 4 * 1 / 3))
        assert scores[2] == pytest.approx(0.5)

    def test_disjoint_vocabulary(self):
        scores = bleu([["a", "b"]], [["x", "y"]], max_n=2)
        assert scores[1] == 0.0

    def test_smoothing_floor(self):
        scores = bleu([["a", "b"]], [["x", "y"]], max_n=1, smooth_eps=0.1)
        assert 0.0 < scores[1] < 0.1

    def test_brevity_penalty(self):
        scores = bleu([["a", "b", "c", "d"]], [["a", "b"]], max_n=1)
        assert scores[1] == pytest.approx(math.exp(1 - 4 / 2) * 1.0)

    def test_corpus_order_invariant(self):
        refs = [["a", "b"], ["c", "d", "e"], ["f"]]
        hyps = [["a", "x"], ["c", "d"], ["f"]]
        fwd = bleu(refs, hyps, max_n=2)
        rev = bleu(refs[::-1], hyps[::-1], max_n=2)
        assert fwd == rev

    def test_errors(self):
        with pytest.raises(ValueError):
            bleu([], [], max_n=2)
        with pytest.raises(ValueError):
            bleu([["a"]], [], max_n=2)


class TestRouge:
    def test_identical(self):
        r1, r2, rl = rouge([["a", "b", "c"]], [["a", "b", "c"]])
        assert (r1, r2, rl) == (1.0, 1.0, 1.0)

    def test_unigram_hand_case(self):
        r1, _, _ = rouge([["a", "c"]], [["a", "b"]])
        assert r1 == pytest.approx(0.5)

    def test_lcs_hand_case(self):
        _, _, rl = rouge([["a", "b", "c"]], [["a", "c", "b"]])
        assert rl == pytest.approx(2 / 3)

    def test_corpus_mean(self):
        r1, _, _ = rouge([["a"], ["b"]], [["a"], ["x"]])
        assert r1 == pytest.approx(0.5)


class TestExactMatch:
    def test_all_identical(self):
        assert exact_match([["a", "b"]], [["a", "b"]]) == 1.0

    def test_quarter(self):
        refs = [["a"], ["b"], ["c"], ["d"]]
        hyps = [["a"], ["x"], ["y"], ["z"]]
        assert exact_match(refs, hyps) == 0.25

    def test_whitespace_normalization(self):
        assert exact_match(["a  b   c"], ["a b c"]) == 1.0
        assert exact_match([["a", "b c"]], [["a b", "c"]]) == 1.0


class TestDistinct:
    def test_hand_case(self):
        assert distinct_n([["a", "a", "b"]], 1) == pytest.approx(2 / 3)

    def test_all_unique(self):
        assert distinct_n([["a", "b"], ["c"]], 1) == 1.0

    def test_short_hypotheses_contribute_nothing(self):
        assert distinct_n([["a"]], 2) == 0.0

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            distinct_n([["a"]], 0)


token_lists = st.lists(
    st.lists(st.sampled_from("abcdef"), min_size=1, max_size=6),
    min_size=1,
    max_size=5,
)


@given(token_lists, st.randoms())
@settings(max_examples=150, deadline=None)
def test_metric_ranges_and_em_bound(refs, rnd):
    hyps = [
        ref if rnd.random() < 0.5 else [rnd.choice("abcdef") for _ in ref]
        for ref in refs
    ]
    report = generation_report(refs, hyps, max_bleu_n=2)
    values = [*report.bleu.values(), report.rouge1, report.rouge2, report.rougeL,
              report.exact_match, *report.distinct.values()]
    assert all(0.0 <= v <= 1.0 for v in values)
    # per pair, an exact match has unigram precision 1, so EM <= BLEU-1;
    # corpus pooling weights pairs by token count, so the bound is
    # per-pair only (three 1-token matches + one 2-token miss gives
    # EM 0.75 > BLEU-1 0.6)
    for ref, hyp in zip(refs, hyps):
        pair = generation_report([ref], [hyp], max_bleu_n=1)
        assert pair.exact_match <= pair.bleu[1] + 1e-12


def test_report_serialization_percent():
    report = generation_report([["a", "b"]], [["a", "b"]], max_bleu_n=2)
    data = report.to_dict(percent=True)
    assert data["bleu"][1] == pytest.approx(100.0)
    assert data["exact_match"] == pytest.approx(100.0)

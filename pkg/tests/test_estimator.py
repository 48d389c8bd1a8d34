import numpy as np
import pytest
import torch
from sklearn.base import clone

from csrl.dialogue import CsrlError, DialogueSession, Frame, Span, Utterance
from csrl.estimator import CsrlTagger, label_vocabulary_hash
from csrl.synthetic import toy_corpus

SMALL = dict(epochs=30, batch_size=4, learning_rate=1e-3, seed=0)


@pytest.fixture(scope="module")
def corpus():
    return toy_corpus()[:8]


@pytest.fixture(scope="module")
def fitted(corpus):
    return CsrlTagger(**SMALL).fit(corpus)


class TestSklearnSurface:
    def test_get_set_params_round_trip(self):
        tagger = CsrlTagger(attn_dim=48, heads=4)
        params = tagger.get_params()
        assert params["attn_dim"] == 48
        other = CsrlTagger().set_params(**params)
        assert other.get_params() == params

    def test_clone(self, fitted):
        fresh = clone(fitted)
        assert fresh.get_params() == fitted.get_params()
        assert not hasattr(fresh, "network_")

    def test_unfitted_predict_raises(self, corpus):
        with pytest.raises(CsrlError):
            CsrlTagger().predict(corpus)


class TestFit:
    def test_loss_decreases_after_one_epoch(self, corpus):
        tagger = CsrlTagger(epochs=2, batch_size=4, learning_rate=1e-3, seed=0)
        tagger.fit(corpus)
        assert tagger.history_[-1]["loss"] < tagger.history_[0]["loss"]

    def test_same_seed_identical_parameters(self, corpus):
        a = CsrlTagger(epochs=5, batch_size=4, seed=11).fit(corpus)
        b = CsrlTagger(epochs=5, batch_size=4, seed=11).fit(corpus)
        for (ka, va), (kb, vb) in zip(
            a.network_.state_dict().items(), b.network_.state_dict().items()
        ):
            assert ka == kb
            assert torch.equal(va, vb)

    def test_different_seed_differs(self, corpus):
        a = CsrlTagger(epochs=2, batch_size=4, seed=1).fit(corpus)
        b = CsrlTagger(epochs=2, batch_size=4, seed=2).fit(corpus)
        same = all(
            torch.equal(va, vb)
            for va, vb in zip(
                a.network_.state_dict().values(), b.network_.state_dict().values()
            )
        )
        assert not same

    def test_rejects_invalid_sessions(self):
        bad = DialogueSession(
            "s",
            [Utterance("A", ["x"])],
            [Frame(Span(0, 0, 1), [("ARG0", Span(0, 0, 9))])],
        )
        with pytest.raises(ValueError, match="OutOfBounds"):
            CsrlTagger(epochs=1).fit([bad])

    def test_rejects_frameless_corpus(self):
        sessions = [DialogueSession("s", [Utterance("A", ["x"])])]
        with pytest.raises(ValueError, match="frames"):
            CsrlTagger(epochs=1).fit(sessions)

    def test_dev_f1_logged(self, corpus):
        tagger = CsrlTagger(epochs=4, batch_size=4, eval_every=2, seed=0)
        tagger.fit(corpus, dev_sessions=corpus[:2])
        assert any("dev_f1_all" in h for h in tagger.history_)


class TestPredict:
    def test_one_frame_per_gold_predicate(self, fitted, corpus):
        predictions = fitted.predict(corpus)
        assert len(predictions) == len(corpus)
        for session, frames in zip(corpus, predictions):
            assert len(frames) == len(session.frames)
            for gold, pred in zip(session.frames, frames):
                assert pred.predicate == gold.predicate

    def test_predictions_decode_to_valid_sessions(self, fitted, corpus):
        from csrl.dialogue import validate_session

        for session, frames in zip(corpus, fitted.predict(corpus)):
            rebuilt = DialogueSession(
                session.session_id, session.utterances, frames
            )
            assert validate_session(rebuilt) == []

    def test_evaluate_report_shape(self, fitted, corpus):
        report = fitted.evaluate(corpus)
        assert 0.0 <= report.all.f1 <= 1.0
        assert report.all.gold == report.intra.gold + report.cross.gold
        assert isinstance(fitted.score(corpus), float)

    def test_unknown_tokens_handled(self, fitted):
        unseen = DialogueSession(
            "new",
            [Utterance("A", ["totally", "fresh"]), Utterance("B", ["words"])],
            [Frame(Span(1, 0, 1), [])],
        )
        result = fitted.predict_result(unseen, unseen.frames[0].predicate)
        assert result.label_distributions.shape == (5, 19)


class TestCheckpoint:
    def test_round_trip(self, fitted, corpus, tmp_path):
        path = tmp_path / "model.pt"
        fitted.save(path)
        loaded = CsrlTagger.load(path)
        s = corpus[0]
        a = fitted.predict_result(s, s.frames[0].predicate)
        b = loaded.predict_result(s, s.frames[0].predicate)
        np.testing.assert_array_equal(a.label_distributions, b.label_distributions)
        assert a.tags == b.tags

    def test_label_vocab_mismatch_refused(self, fitted, tmp_path):
        path = tmp_path / "model.pt"
        fitted.save(path)
        payload = torch.load(path, weights_only=False)
        payload["label_vocab_hash"] = "0" * 64
        torch.save(payload, path)
        with pytest.raises(CsrlError, match="label vocabulary"):
            CsrlTagger.load(path)

    def test_hash_is_stable(self):
        assert label_vocabulary_hash() == label_vocabulary_hash()

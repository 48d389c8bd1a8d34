"""Scikit-learn style estimator around the cross-turn tagger.

`CsrlTagger` follows the usual conventions: constructor arguments are
hyperparameters stored verbatim (so `get_params` / `set_params` and
`clone` work), `fit` learns from sessions' gold frames and returns self,
learned state lands in trailing-underscore attributes, and `predict`
emits one frame per gold predicate. Training is deterministic for a
fixed seed.
"""

from __future__ import annotations

import hashlib
import logging
import random
from pathlib import Path
from typing import Sequence

import torch
from sklearn.base import BaseEstimator

from .config import ModelConfig
from .dialogue import CsrlError, DialogueSession, Frame, Span
from .metrics import EvalReport, f1_report, frames_to_tuples, gold_tuples
from .network import (
    CompactUtteranceEncoder,
    CsrlNetwork,
    PredictionResult,
    TrainingSample,
    Vocabulary,
    make_sample,
)
from .tags import label_vocabulary
from .validation import check_sessions

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1


def label_vocabulary_hash() -> str:
    joined = "\n".join(label_vocabulary())
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


class CsrlTagger(BaseEstimator):
    """Cross-turn semantic role tagger.

    Defaults are compact (CPU-trainable); pass the full-scale values
    through the same parameters to reproduce a large configuration.

    Parameters mirror :class:`~csrl.config.ModelConfig` plus the training
    loop knobs. ``early_stop_f1`` stops training once the training-set
    F1_all reaches the threshold (checked every ``eval_every`` epochs).
    """

    def __init__(
        self,
        encoder_dim: int = 48,
        encoder_layers: int = 1,
        encoder_heads: int = 2,
        encoder_ffn_dim: int = 96,
        max_utterance_len: int = 64,
        attn_dim: int = 64,
        heads: int = 4,
        layers: int = 2,
        predicate_ind_dim: int = 8,
        speaker_ind_dim: int = 8,
        turn_ind_dim: int = 8,
        turn_clip: int = 10,
        mlp_hidden: int = 64,
        span_loss_weight: float = 1.0,
        use_predicate_indicator: bool = True,
        use_speaker_indicator: bool = True,
        use_turn_indicator: bool = True,
        epochs: int = 100,
        batch_size: int = 8,
        learning_rate: float = 1e-3,
        eval_every: int = 10,
        early_stop_f1: float | None = None,
        num_threads: int | None = 1,
        seed: int = 0,
    ):
        self.encoder_dim = encoder_dim
        self.encoder_layers = encoder_layers
        self.encoder_heads = encoder_heads
        self.encoder_ffn_dim = encoder_ffn_dim
        self.max_utterance_len = max_utterance_len
        self.attn_dim = attn_dim
        self.heads = heads
        self.layers = layers
        self.predicate_ind_dim = predicate_ind_dim
        self.speaker_ind_dim = speaker_ind_dim
        self.turn_ind_dim = turn_ind_dim
        self.turn_clip = turn_clip
        self.mlp_hidden = mlp_hidden
        self.span_loss_weight = span_loss_weight
        self.use_predicate_indicator = use_predicate_indicator
        self.use_speaker_indicator = use_speaker_indicator
        self.use_turn_indicator = use_turn_indicator
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.eval_every = eval_every
        self.early_stop_f1 = early_stop_f1
        self.num_threads = num_threads
        self.seed = seed

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            encoder_dim=self.encoder_dim,
            encoder_layers=self.encoder_layers,
            encoder_heads=self.encoder_heads,
            encoder_ffn_dim=self.encoder_ffn_dim,
            max_utterance_len=self.max_utterance_len,
            attn_dim=self.attn_dim,
            heads=self.heads,
            layers=self.layers,
            predicate_ind_dim=self.predicate_ind_dim,
            speaker_ind_dim=self.speaker_ind_dim,
            turn_ind_dim=self.turn_ind_dim,
            turn_clip=self.turn_clip,
            mlp_hidden=self.mlp_hidden,
            span_loss_weight=self.span_loss_weight,
            use_predicate_indicator=self.use_predicate_indicator,
            use_speaker_indicator=self.use_speaker_indicator,
            use_turn_indicator=self.use_turn_indicator,
            seed=self.seed,
        )

    def _build(self, vocab: Vocabulary, config: ModelConfig) -> CsrlNetwork:
        torch.manual_seed(config.seed)
        encoder = CompactUtteranceEncoder(
            vocab,
            dim=config.encoder_dim,
            layers=config.encoder_layers,
            heads=config.encoder_heads,
            ffn_dim=config.encoder_ffn_dim,
            max_len=config.max_utterance_len,
        )
        return CsrlNetwork(config, encoder)

    def _samples(
        self, sessions: Sequence[DialogueSession], with_gold: bool
    ) -> list[TrainingSample]:
        out = []
        for session in sessions:
            for frame in session.frames:
                out.append(
                    make_sample(
                        session, frame, turn_clip=self.turn_clip, with_gold=with_gold
                    )
                )
        return out

    def fit(
        self,
        sessions: Sequence[DialogueSession],
        dev_sessions: Sequence[DialogueSession] | None = None,
    ) -> "CsrlTagger":
        sessions = check_sessions(sessions, require_frames=True)
        if self.num_threads is not None:
            # tiny models train much faster without thread oversubscription
            torch.set_num_threads(self.num_threads)
        config = self._model_config()
        vocab = Vocabulary.from_sessions(sessions)
        network = self._build(vocab, config)
        samples = self._samples(sessions, with_gold=True)
        if not samples:
            raise ValueError("training corpus contains no frames")

        optimizer = torch.optim.Adam(network.parameters(), lr=self.learning_rate)
        rng = random.Random(self.seed)
        order = list(range(len(samples)))
        history: list[dict] = []

        self.config_ = config
        self.vocab_ = vocab
        self.network_ = network
        self.label_vocab_ = label_vocabulary()

        for epoch in range(1, self.epochs + 1):
            network.train()
            rng.shuffle(order)
            epoch_loss = 0.0
            n_batches = 0
            for start in range(0, len(order), self.batch_size):
                batch = [samples[i] for i in order[start : start + self.batch_size]]
                optimizer.zero_grad()
                loss = network.loss(batch)
                if not torch.isfinite(loss):
                    raise FloatingPointError(
                        f"training diverged: non-finite loss at epoch {epoch}, "
                        f"step {n_batches}"
                    )
                loss.backward()
                optimizer.step()
                epoch_loss += float(loss.detach())
                n_batches += 1
            record = {"epoch": epoch, "loss": epoch_loss / n_batches}
            check_now = epoch % self.eval_every == 0 or epoch == self.epochs
            if dev_sessions is not None and check_now:
                record["dev_f1_all"] = self.evaluate(dev_sessions).all.f1
            if self.early_stop_f1 is not None and check_now:
                train_f1 = self.evaluate(sessions).all.f1
                record["train_f1_all"] = train_f1
                history.append(record)
                logger.info("epoch %s: %s", epoch, record)
                if train_f1 >= self.early_stop_f1:
                    break
            else:
                history.append(record)
                logger.info("epoch %s: %s", epoch, record)
        self.history_ = history
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "network_"):
            raise CsrlError("estimator is not fitted; call fit() or load()")

    def predict(self, sessions: Sequence[DialogueSession]) -> list[list[Frame]]:
        """One predicted frame per gold predicate of each session."""
        self._check_fitted()
        sessions = check_sessions(sessions)
        self.network_.eval()
        out: list[list[Frame]] = []
        for session in sessions:
            frames = [
                self.predict_result(session, frame.predicate).frame
                for frame in session.frames
            ]
            out.append(frames)
        return out

    def predict_result(
        self, session: DialogueSession, predicate: Span
    ) -> PredictionResult:
        """Full per-token distributions and decoded frame for one
        predicate."""
        self._check_fitted()
        self.network_.eval()
        sample = make_sample(
            session, Frame(predicate), turn_clip=self.turn_clip, with_gold=False
        )
        return self.network_.predict_sample(sample)

    def evaluate(self, sessions: Sequence[DialogueSession]) -> EvalReport:
        """Micro F1 of predictions against the sessions' gold frames."""
        predicted = self.predict(sessions)
        pred_by_session = {
            s.session_id: frames for s, frames in zip(sessions, predicted)
        }
        return f1_report(
            gold_tuples(sessions), frames_to_tuples(sessions, pred_by_session)
        )

    def score(self, sessions: Sequence[DialogueSession]) -> float:
        return self.evaluate(sessions).all.f1

    def save(self, path: str | Path) -> None:
        """Write a checkpoint: config, vocabulary, weights, seed, and the
        label-vocabulary hash guarding against incompatible loads."""
        self._check_fitted()
        payload = {
            "format": CHECKPOINT_FORMAT,
            "config": self.config_.to_dict(),
            "vocab": self.vocab_.tokens(),
            "state": self.network_.state_dict(),
            "seed": self.seed,
            "label_vocab_hash": label_vocabulary_hash(),
            "params": self.get_params(),
        }
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        torch.save(payload, tmp)
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "CsrlTagger":
        payload = torch.load(path, map_location="cpu", weights_only=False)
        if payload.get("format") != CHECKPOINT_FORMAT:
            raise CsrlError(f"unsupported checkpoint format: {payload.get('format')}")
        if payload["label_vocab_hash"] != label_vocabulary_hash():
            raise CsrlError(
                "checkpoint label vocabulary does not match this build; "
                "refusing to load"
            )
        est = cls(**payload["params"])
        config = ModelConfig.from_dict(payload["config"])
        vocab = Vocabulary(payload["vocab"])
        network = est._build(vocab, config)
        network.load_state_dict(payload["state"])
        est.config_ = config
        est.vocab_ = vocab
        est.network_ = network
        est.label_vocab_ = label_vocabulary()
        est.history_ = []
        return est

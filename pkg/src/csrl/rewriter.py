"""Compact demonstrator for triple-conditioned rewriting and response
generation.

Reuses the tagger's self-attention layers with the structured mask
injected into the softmax. Token, segment-type and position embeddings
are summed per position; training minimizes the NLL of the response
tokens given the triples and context; decoding is greedy.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F
from sklearn.base import BaseEstimator

from .dialogue import CsrlError, Utterance
from .linearize import (
    BOS_TOKEN,
    EOS_TOKEN,
    SEGMENT_A,
    SEGMENT_B,
    SEGMENT_SRL,
    LinearizedInput,
    MaskKind,
    PATriple,
    linearize,
)
from .network import SelfAttentionLayer, Vocabulary, _MlpHead

logger = logging.getLogger(__name__)

_SEGMENT_INDEX = {SEGMENT_A: 0, SEGMENT_B: 1, SEGMENT_SRL: 2}


@dataclass(frozen=True)
class RewriteExample:
    """One supervision item: triples plus context in, target tokens out."""

    triples: tuple[PATriple, ...]
    context: tuple[Utterance, ...]
    target: tuple[str, ...]
    response_speaker: str


class _GeneratorNet(nn.Module):
    def __init__(
        self,
        vocab: Vocabulary,
        dim: int,
        heads: int,
        layers: int,
        mlp_hidden: int,
        max_position: int,
    ):
        super().__init__()
        self.vocab = vocab
        self.max_position = max_position
        self.token_emb = nn.Embedding(len(vocab), dim)
        self.segment_emb = nn.Embedding(len(_SEGMENT_INDEX), dim)
        self.position_emb = nn.Embedding(max_position, dim)
        self.layers = nn.ModuleList(
            SelfAttentionLayer(dim, heads) for _ in range(layers)
        )
        self.head = _MlpHead(dim, mlp_hidden, len(vocab))

    def forward(self, linearized: LinearizedInput) -> torch.Tensor:
        device = self.token_emb.weight.device
        if max(linearized.positions) >= self.max_position:
            raise CsrlError(
                f"position {max(linearized.positions)} exceeds table size "
                f"{self.max_position}"
            )
        token_ids = torch.tensor(
            [self.vocab.id(t) for t in linearized.tokens], device=device
        )
        segment_ids = torch.tensor(
            [_SEGMENT_INDEX[s] for s in linearized.segments], device=device
        )
        position_ids = torch.tensor(list(linearized.positions), device=device)
        x = (
            self.token_emb(token_ids)
            + self.segment_emb(segment_ids)
            + self.position_emb(position_ids)
        ).unsqueeze(0)
        mask = torch.from_numpy(linearized.mask).to(device)
        for layer in self.layers:
            x, _ = layer(x, attn_mask=mask)
        return self.head(x).squeeze(0)


class RewriteGenerator(BaseEstimator):
    """Sequence generator conditioned on PA triples and dialogue context.

    `fit` overfits the supplied examples; `generate` decodes greedily
    until [EOS] or ``max_len``. Deterministic for a fixed seed.
    """

    def __init__(
        self,
        dim: int = 64,
        heads: int = 4,
        layers: int = 2,
        mlp_hidden: int = 96,
        max_position: int = 64,
        mask_kind: MaskKind = "triple",
        attend_z: bool = True,
        epochs: int = 300,
        learning_rate: float = 3e-3,
        max_len: int = 24,
        seed: int = 0,
    ):
        self.dim = dim
        self.heads = heads
        self.layers = layers
        self.mlp_hidden = mlp_hidden
        self.max_position = max_position
        self.mask_kind = mask_kind
        self.attend_z = attend_z
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.max_len = max_len
        self.seed = seed

    def _linearize(
        self,
        triples: Sequence[PATriple],
        context: Sequence[Utterance],
        response_tokens: Sequence[str] | None,
        response_speaker: str,
    ) -> LinearizedInput:
        return linearize(
            triples,
            context,
            response_tokens,
            mask_kind=self.mask_kind,
            response_speaker=response_speaker,
            attend_z=self.attend_z,
        )

    def fit(self, examples: Sequence[RewriteExample]) -> "RewriteGenerator":
        examples = list(examples)
        if not examples:
            raise ValueError("need at least one training example")
        tokens: list[str] = [BOS_TOKEN, EOS_TOKEN]
        for ex in examples:
            for triple in ex.triples:
                tokens.extend(triple.tokens())
            for utt in ex.context:
                tokens.extend(utt.tokens)
            tokens.extend(ex.target)
        torch.manual_seed(self.seed)
        self.vocab_ = Vocabulary(tokens)
        self.network_ = _GeneratorNet(
            self.vocab_,
            dim=self.dim,
            heads=self.heads,
            layers=self.layers,
            mlp_hidden=self.mlp_hidden,
            max_position=self.max_position,
        )
        inputs = [
            self._linearize(
                ex.triples,
                ex.context,
                list(ex.target) + [EOS_TOKEN],
                ex.response_speaker,
            )
            for ex in examples
        ]
        optimizer = torch.optim.Adam(
            self.network_.parameters(), lr=self.learning_rate
        )
        rng = random.Random(self.seed)
        order = list(range(len(inputs)))
        history = []
        for epoch in range(1, self.epochs + 1):
            rng.shuffle(order)
            total = 0.0
            for i in order:
                optimizer.zero_grad()
                loss = self._loss(inputs[i])
                loss.backward()
                optimizer.step()
                total += float(loss.detach())
            history.append({"epoch": epoch, "loss": total / len(inputs)})
            if epoch % 50 == 0:
                logger.info("epoch %s: loss %.4f", epoch, history[-1]["loss"])
        self.history_ = history
        return self

    def _loss(self, linearized: LinearizedInput) -> torch.Tensor:
        logits = self.network_(linearized)
        r = linearized.region_slice("R")
        if r.stop - r.start < 2:
            raise ValueError("response region is empty")
        logp = F.log_softmax(logits, dim=-1)
        total = logits.new_zeros(())
        for t in range(r.start + 1, r.stop):
            target_id = self.vocab_.id(linearized.tokens[t])
            total = total - logp[t - 1, target_id]
        return total

    def generation_loss(self, linearized: LinearizedInput) -> float:
        """NLL summed over the response tokens of an assembled input."""
        self._check_fitted()
        self.network_.eval()
        with torch.no_grad():
            return float(self._loss(linearized))

    def _check_fitted(self) -> None:
        if not hasattr(self, "network_"):
            raise CsrlError("generator is not fitted")

    @torch.no_grad()
    def generate(
        self,
        triples: Sequence[PATriple],
        context: Sequence[Utterance],
        response_speaker: str | None = None,
        max_len: int | None = None,
    ) -> list[str]:
        """Greedy decoding: argmax next-token until [EOS] or the length
        budget."""
        self._check_fitted()
        self.network_.eval()
        if response_speaker is None:
            response_speaker = context[-1].speaker
        budget = self.max_len if max_len is None else max_len
        generated: list[str] = []
        while len(generated) < budget:
            linearized = self._linearize(
                triples, context, generated, response_speaker
            )
            logits = self.network_(linearized)
            next_id = int(logits[len(linearized) - 1].argmax())
            token = self.vocab_.token(next_id)
            if token == EOS_TOKEN:
                break
            generated.append(token)
        return generated

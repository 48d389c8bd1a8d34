"""Neural network for cross-turn argument tagging.

Pipeline: a per-utterance encoder contextualizes each turn in isolation
(its speaker marker included); predicate / speaker / dialog-turn
indicator embeddings are concatenated to the token vectors; a learned
affine map projects to the attention width; a stack of full-visibility
self-attention layers mixes information across turns; two
one-hidden-layer MLP heads emit per-token distributions over the 19 role
labels and the 3 mention labels.

The utterance encoder is a sealed contract (`UtteranceEncoder`): anything
that maps batches of token-string sequences to padded per-token vectors
can be plugged in; the reference implementation is a compact randomly
initialized transformer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ModelConfig
from .dialogue import (
    DEFAULT_MARKERS,
    CsrlError,
    DialogueSession,
    FlatDialogue,
    Frame,
    Span,
    flat_index,
    flatten,
)
from .tags import MENTION_LABELS, encode_frame, encode_mentions, label_vocabulary

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"


class Vocabulary:
    """Closed token-to-id map with a padding and an unknown slot."""

    def __init__(self, tokens: Sequence[str]):
        seen = sorted(set(tokens) - {PAD_TOKEN, UNK_TOKEN})
        self._itos: list[str] = [PAD_TOKEN, UNK_TOKEN] + seen
        self._stoi = {tok: i for i, tok in enumerate(self._itos)}

    @classmethod
    def from_sessions(
        cls,
        sessions: Sequence[DialogueSession],
        markers: tuple[str, str] = DEFAULT_MARKERS,
    ) -> "Vocabulary":
        tokens: list[str] = list(markers)
        for session in sessions:
            for utt in session.utterances:
                tokens.extend(utt.tokens)
        return cls(tokens)

    def __len__(self) -> int:
        return len(self._itos)

    def id(self, token: str) -> int:
        return self._stoi.get(token, 1)

    def token(self, idx: int) -> str:
        return self._itos[idx]

    @property
    def pad_id(self) -> int:
        return 0

    def tokens(self) -> list[str]:
        return list(self._itos)


class MultiHeadSelfAttention(nn.Module):
    """Scaled dot-product self-attention over all positions.

    Queries, keys and values come from separate linear maps of the input;
    per-head attention weights are the softmax of QK^T / sqrt(d_k); the
    heads' weighted value sums are concatenated and linearly recombined.

    ``attn_mask`` is boolean with True = may attend, shaped (N, N) or
    (B, N, N); ``key_padding_mask`` is boolean with True = padding,
    shaped (B, N). Returns the recombined output and the attention
    probabilities (B, heads, N, N).
    """

    def __init__(self, dim: int, heads: int):
        super().__init__()
        if dim % heads:
            raise ValueError(f"dim {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(dim, dim)
        self.v_proj = nn.Linear(dim, dim)
        self.out_proj = nn.Linear(dim, dim)

    def forward(
        self,
        x: torch.Tensor,
        attn_mask: torch.Tensor | None = None,
        key_padding_mask: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        bsz, n, _ = x.shape

        def split(t: torch.Tensor) -> torch.Tensor:
            return t.view(bsz, n, self.heads, self.head_dim).transpose(1, 2)

        q = split(self.q_proj(x))
        k = split(self.k_proj(x))
        v = split(self.v_proj(x))
        scores = q @ k.transpose(-1, -2) / self.head_dim**0.5
        if attn_mask is not None:
            if attn_mask.dim() == 2:
                blocked = ~attn_mask[None, None, :, :]
            else:
                blocked = ~attn_mask[:, None, :, :]
            scores = scores.masked_fill(blocked, float("-inf"))
        if key_padding_mask is not None:
            scores = scores.masked_fill(
                key_padding_mask[:, None, None, :], float("-inf")
            )
        probs = F.softmax(scores, dim=-1)
        if not torch.isfinite(probs).all():
            raise FloatingPointError("non-finite attention probabilities")
        out = (probs @ v).transpose(1, 2).reshape(bsz, n, self.dim)
        return self.out_proj(out), probs


class SelfAttentionLayer(nn.Module):
    """One dialogue-level layer: attention with a residual connection and
    layer normalization."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.attn = MultiHeadSelfAttention(dim, heads)
        self.norm = nn.LayerNorm(dim)

    def forward(
        self,
        x: torch.Tensor,
        attn_mask: torch.Tensor | None = None,
        key_padding_mask: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        out, probs = self.attn(x, attn_mask, key_padding_mask)
        return self.norm(x + out), probs


class _EncoderBlock(nn.Module):
    def __init__(self, dim: int, heads: int, ffn_dim: int):
        super().__init__()
        self.attn = MultiHeadSelfAttention(dim, heads)
        self.norm1 = nn.LayerNorm(dim)
        self.ffn = nn.Sequential(
            nn.Linear(dim, ffn_dim), nn.GELU(), nn.Linear(ffn_dim, dim)
        )
        self.norm2 = nn.LayerNorm(dim)

    def forward(
        self, x: torch.Tensor, key_padding_mask: torch.Tensor | None
    ) -> torch.Tensor:
        out, _ = self.attn(x, key_padding_mask=key_padding_mask)
        x = self.norm1(x + out)
        return self.norm2(x + self.ffn(x))


class UtteranceTooLong(CsrlError):
    pass


class CompactUtteranceEncoder(nn.Module):
    """Reference utterance encoder: a small randomly initialized
    transformer applied to each utterance independently.

    Contract (shared by any pluggable replacement): calling the module on
    a batch of token-string sequences returns padded vectors (U, L,
    output_dim) plus a boolean real-token mask (U, L); a token's vector
    depends only on its own utterance. `max_len` bounds the accepted
    utterance length (marker included).
    """

    def __init__(
        self,
        vocab: Vocabulary,
        dim: int = 256,
        layers: int = 2,
        heads: int = 4,
        ffn_dim: int = 512,
        max_len: int = 128,
    ):
        super().__init__()
        self.vocab = vocab
        self.output_dim = dim
        self.max_len = max_len
        self.embed = nn.Embedding(len(vocab), dim)
        self.pos = nn.Embedding(max_len, dim)
        self.blocks = nn.ModuleList(
            _EncoderBlock(dim, heads, ffn_dim) for _ in range(layers)
        )

    def forward(
        self, utterances: Sequence[Sequence[str]]
    ) -> tuple[torch.Tensor, torch.Tensor]:
        lengths = [len(u) for u in utterances]
        longest = max(lengths)
        if longest > self.max_len:
            raise UtteranceTooLong(
                f"utterance of length {longest} exceeds encoder maximum "
                f"{self.max_len}"
            )
        device = self.embed.weight.device
        ids = torch.full(
            (len(utterances), longest), self.vocab.pad_id, dtype=torch.long,
            device=device,
        )
        for i, utt in enumerate(utterances):
            ids[i, : len(utt)] = torch.tensor(
                [self.vocab.id(t) for t in utt], dtype=torch.long, device=device
            )
        real = torch.zeros(len(utterances), longest, dtype=torch.bool, device=device)
        for i, n in enumerate(lengths):
            real[i, :n] = True
        x = self.embed(ids) + self.pos(
            torch.arange(longest, device=device)
        ).unsqueeze(0)
        padding = ~real
        for block in self.blocks:
            x = block(x, key_padding_mask=padding)
        return x, real


@dataclass(frozen=True)
class TrainingSample:
    """One (dialogue, predicate) instance ready for the network.

    All per-item sequences share the flattened length; turn distances are
    signed and clipped to the configured window (earlier turns positive).
    """

    flat: FlatDialogue
    predicate: Span
    predicate_indicator: tuple[int, ...]
    speaker_ids: tuple[int, ...]
    turn_distances: tuple[int, ...]
    gold_tags: tuple[str, ...] | None = None
    gold_mentions: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.flat)
        for name in ("predicate_indicator", "speaker_ids", "turn_distances"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length mismatch with flattened dialogue")
        if sum(self.predicate_indicator) < 1:
            raise ValueError("predicate indicator must mark at least one position")

    def __len__(self) -> int:
        return len(self.flat)


def build_indicators(
    flat: FlatDialogue, predicate: Span, config: ModelConfig
) -> tuple[list[int], list[int], list[int]]:
    """Per-item indicator ids: predicate flags in {0,1}, speaker ids in
    {0,1}, and turn distances clipped to ±turn_clip then shifted to
    non-negative embedding-table indices."""
    p_start, p_end = flat_index(flat, predicate)
    clip = config.turn_clip
    predicate_ids = [1 if p_start <= i < p_end else 0 for i in range(len(flat))]
    speaker_ids = [0 if item.speaker == "A" else 1 for item in flat.items]
    turn_ids = [
        max(-clip, min(clip, predicate.turn - item.turn)) + clip
        for item in flat.items
    ]
    return predicate_ids, speaker_ids, turn_ids


def make_sample(
    session: DialogueSession,
    frame: Frame,
    turn_clip: int = 10,
    markers: tuple[str, str] = DEFAULT_MARKERS,
    with_gold: bool = True,
) -> TrainingSample:
    """Featurize one (session, frame) pair.

    With ``with_gold`` the frame's arguments are BIO-encoded as targets
    and the session's mentions (when annotated) become the auxiliary
    span targets.
    """
    flat = flatten(session, markers)
    p_start, p_end = flat_index(flat, frame.predicate)
    predicate_indicator = tuple(
        1 if p_start <= i < p_end else 0 for i in range(len(flat))
    )
    speaker_ids = tuple(0 if item.speaker == "A" else 1 for item in flat.items)
    turn_distances = tuple(
        max(-turn_clip, min(turn_clip, frame.predicate.turn - item.turn))
        for item in flat.items
    )
    gold_tags = tuple(encode_frame(flat, frame)) if with_gold else None
    gold_mentions = None
    if with_gold and session.mentions is not None:
        gold_mentions = tuple(encode_mentions(flat, session.mentions))
    return TrainingSample(
        flat=flat,
        predicate=frame.predicate,
        predicate_indicator=predicate_indicator,
        speaker_ids=speaker_ids,
        turn_distances=turn_distances,
        gold_tags=gold_tags,
        gold_mentions=gold_mentions,
    )


def utterance_groups(flat: FlatDialogue) -> list[list[str]]:
    """Token strings per turn, marker first: the encoder's input."""
    groups: list[list[str]] = [[] for _ in range(flat.n_turns)]
    for item in flat.items:
        groups[item.turn].append(item.text)
    return groups


def sanitize_arguments(
    flat: FlatDialogue, predicate: Span, decoded: Sequence[tuple[str, Span]]
) -> tuple[list[tuple[str, Span]], list[str]]:
    """Enforce the annotation criteria on decoded arguments.

    Gold arguments never follow their predicate's turn, never overlap the
    predicate, and fill each role at most once, so predicted spans
    breaking those rules are guaranteed wrong: future and
    predicate-overlapping spans are dropped, and of several spans for one
    role the one nearest the predicate survives (mirroring the
    closest-mention annotation rule). Returns (kept, drop descriptions).
    """
    p_start, p_end = flat_index(flat, predicate)
    kept: dict[str, tuple[Span, int]] = {}
    dropped: list[str] = []
    order: list[str] = []
    for role, span in decoded:
        start, end = flat_index(flat, span)
        if span.turn > predicate.turn:
            dropped.append(f"{role}@{span.turn}:{span.start}-{span.end}: future turn")
            continue
        if start < p_end and p_start < end:
            dropped.append(
                f"{role}@{span.turn}:{span.start}-{span.end}: overlaps predicate"
            )
            continue
        distance = abs(start - p_start)
        if role not in kept:
            kept[role] = (span, distance)
            order.append(role)
        elif distance < kept[role][1]:
            old = kept[role][0]
            dropped.append(
                f"{role}@{old.turn}:{old.start}-{old.end}: farther duplicate role"
            )
            kept[role] = (span, distance)
        else:
            dropped.append(
                f"{role}@{span.turn}:{span.start}-{span.end}: farther duplicate role"
            )
    return [(role, kept[role][0]) for role in order], dropped


@dataclass(frozen=True)
class PredictionResult:
    """Per-token label distributions with the decoded argmax frame.

    The frame is sanitized so it always satisfies the annotation
    criteria: decoded spans in turns after the predicate or overlapping
    it are discarded (gold arguments can never live there), and when one
    role decodes to several spans only the one closest to the predicate
    is kept. ``dropped`` describes every discarded span.
    """

    label_distributions: np.ndarray
    tags: tuple[str, ...]
    frame: Frame
    dropped: tuple[str, ...] = ()


class _MlpHead(nn.Module):
    def __init__(self, dim: int, hidden: int, n_out: int):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, n_out))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class CsrlNetwork(nn.Module):
    """Full tagger: encoder, indicators, projection, attention stack, and
    the two classifier heads."""

    def __init__(self, config: ModelConfig, encoder: nn.Module):
        super().__init__()
        self.config = config
        self.encoder = encoder
        self.labels = label_vocabulary()
        self.label_index = {lab: i for i, lab in enumerate(self.labels)}
        self.mention_index = {lab: i for i, lab in enumerate(MENTION_LABELS)}

        if config.use_predicate_indicator:
            self.predicate_emb = nn.Embedding(2, config.predicate_ind_dim)
        if config.use_speaker_indicator:
            self.speaker_emb = nn.Embedding(2, config.speaker_ind_dim)
        if config.use_turn_indicator:
            self.turn_emb = nn.Embedding(2 * config.turn_clip + 1, config.turn_ind_dim)

        in_dim = encoder.output_dim + config.indicator_dim
        self.project = nn.Linear(in_dim, config.attn_dim)
        self.dialogue_layers = nn.ModuleList(
            SelfAttentionLayer(config.attn_dim, config.heads)
            for _ in range(config.layers)
        )
        self.srl_head = _MlpHead(config.attn_dim, config.mlp_hidden, len(self.labels))
        self.mention_head = _MlpHead(config.attn_dim, config.mlp_hidden, len(MENTION_LABELS))

    @property
    def device(self) -> torch.device:
        return self.project.weight.device

    def _encode_flat(self, samples: Sequence[TrainingSample]) -> torch.Tensor:
        """Run the utterance encoder over every turn of every sample and
        reassemble per-sample flattened sequences, padded to the longest."""
        all_utts: list[list[str]] = []
        slices: list[tuple[int, int]] = []
        for sample in samples:
            groups = utterance_groups(sample.flat)
            slices.append((len(all_utts), len(groups)))
            all_utts.extend(groups)
        encoded, real = self.encoder(all_utts)
        n_max = max(len(s) for s in samples)
        out = encoded.new_zeros(len(samples), n_max, self.encoder.output_dim)
        for i, (start, count) in enumerate(slices):
            rows = [encoded[u][real[u]] for u in range(start, start + count)]
            seq = torch.cat(rows, dim=0)
            out[i, : seq.shape[0]] = seq
        return out

    def _collate_ids(
        self, samples: Sequence[TrainingSample]
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        n_max = max(len(s) for s in samples)
        shape = (len(samples), n_max)
        pred = torch.zeros(shape, dtype=torch.long, device=self.device)
        spk = torch.zeros(shape, dtype=torch.long, device=self.device)
        turn = torch.zeros(shape, dtype=torch.long, device=self.device)
        real = torch.zeros(shape, dtype=torch.bool, device=self.device)
        clip = self.config.turn_clip
        for i, s in enumerate(samples):
            n = len(s)
            pred[i, :n] = torch.tensor(s.predicate_indicator, dtype=torch.long)
            spk[i, :n] = torch.tensor(s.speaker_ids, dtype=torch.long)
            turn[i, :n] = torch.tensor(
                [d + clip for d in s.turn_distances], dtype=torch.long
            )
            real[i, :n] = True
        return pred, spk, turn, real

    def forward(
        self,
        samples: Sequence[TrainingSample],
        return_attention: bool = False,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, list[torch.Tensor]]:
        """Returns (srl_logits, mention_logits, real_mask, attention).

        Logits are (B, N_max, n_labels); ``real_mask`` (B, N_max) is True
        on genuine positions. ``attention`` holds each layer's
        probabilities when requested.
        """
        pred, spk, turn, real = self._collate_ids(samples)
        h = self._encode_flat(samples)
        parts = [h]
        if self.config.use_predicate_indicator:
            parts.append(self.predicate_emb(pred))
        if self.config.use_speaker_indicator:
            parts.append(self.speaker_emb(spk))
        if self.config.use_turn_indicator:
            parts.append(self.turn_emb(turn))
        h = self.project(torch.cat(parts, dim=-1))

        attention: list[torch.Tensor] = []
        padding = ~real
        for li, layer in enumerate(self.dialogue_layers):
            h, probs = layer(h, key_padding_mask=padding)
            if not torch.isfinite(h).all():
                raise FloatingPointError(
                    f"non-finite activations after dialogue layer {li}"
                )
            if return_attention:
                attention.append(probs)
        return self.srl_head(h), self.mention_head(h), real, attention

    def loss(self, samples: Sequence[TrainingSample]) -> torch.Tensor:
        """Mean-per-position SRL cross-entropy plus the weighted mention
        cross-entropy, averaged over the batch. Samples without mention
        annotation contribute no mention term."""
        srl_logits, mention_logits, real, _ = self.forward(samples)
        srl_logp = F.log_softmax(srl_logits, dim=-1)
        mention_logp = F.log_softmax(mention_logits, dim=-1)
        total = srl_logits.new_zeros(())
        for i, sample in enumerate(samples):
            if sample.gold_tags is None:
                raise ValueError("loss requires gold tags on every sample")
            n = len(sample)
            tag_ids = torch.tensor(
                [self.label_index[t] for t in sample.gold_tags], device=self.device
            )
            sample_loss = -srl_logp[i, :n].gather(1, tag_ids[:, None]).mean()
            if sample.gold_mentions is not None:
                mention_ids = torch.tensor(
                    [self.mention_index[t] for t in sample.gold_mentions],
                    device=self.device,
                )
                span_nll = -mention_logp[i, :n].gather(1, mention_ids[:, None]).mean()
                sample_loss = sample_loss + self.config.span_loss_weight * span_nll
            total = total + sample_loss
        return total / len(samples)

    @torch.no_grad()
    def encode_session(self, session: DialogueSession) -> np.ndarray:
        """Per-token encoder vectors (N, encoder_dim) for one session,
        markers included; contextualization is strictly per-utterance."""
        flat = flatten(session)
        encoded, real = self.encoder(utterance_groups(flat))
        rows = [encoded[u][real[u]] for u in range(flat.n_turns)]
        return torch.cat(rows, dim=0).cpu().numpy()

    @torch.no_grad()
    def predict_sample(self, sample: TrainingSample) -> PredictionResult:
        from .tags import decode_tags

        srl_logits, _, _, _ = self.forward([sample])
        probs = F.softmax(srl_logits[0, : len(sample)], dim=-1).cpu().numpy()
        tag_ids = probs.argmax(axis=1)
        tags = tuple(self.labels[i] for i in tag_ids)
        decoded = decode_tags(list(tags), sample.flat)
        arguments, dropped = sanitize_arguments(
            sample.flat, sample.predicate, decoded
        )
        return PredictionResult(
            probs, tags, Frame(sample.predicate, arguments), tuple(dropped)
        )

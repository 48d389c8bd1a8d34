"""Predicate-argument linearization for conditional generation.

Frames are decomposed into <predicate, role, argument> triples, rendered
as token runs and concatenated (seeded shuffle, canonical order for seed
0) into the Z region of the model input. The dialogue context (each
utterance closed by [EOS]) follows as region C, and the response region R
opens with [BOS]. Position ids restart for every triple and for every
context utterance; segment types distinguish the response speaker's
tokens (E_A), the other speaker's (E_B), and triple tokens (E_SRL).

The attention mask encodes the structure: response tokens attend Z, C and
their own past; context attends Z and C bidirectionally; triple tokens
attend their own triple ("triple" mask) or all of Z ("bi" mask) and never
look into C or R.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .dialogue import (
    DialogueSession,
    Frame,
    Utterance,
    parse_role,
    flat_index,
    flatten,
)

EOS_TOKEN = "[EOS]"
BOS_TOKEN = "[BOS]"

SEGMENT_A = "E_A"
SEGMENT_B = "E_B"
SEGMENT_SRL = "E_SRL"

MaskKind = Literal["bi", "triple"]


@dataclass(frozen=True)
class PATriple:
    """One <predicate, role, argument> unit with materialized token
    texts."""

    predicate_text: tuple[str, ...]
    role: str
    argument_text: tuple[str, ...]

    def __init__(
        self, predicate_text: Sequence[str], role: str, argument_text: Sequence[str]
    ):
        if not predicate_text or not argument_text:
            raise ValueError("triple texts must be non-empty")
        object.__setattr__(self, "predicate_text", tuple(predicate_text))
        object.__setattr__(self, "role", parse_role(role))
        object.__setattr__(self, "argument_text", tuple(argument_text))

    def tokens(self) -> list[str]:
        """Surface form: predicate tokens, the role label, argument
        tokens."""
        return [*self.predicate_text, self.role, *self.argument_text]


def extract_triples(
    session: DialogueSession,
    frames: Sequence[Frame] | None = None,
    order_seed: int = 0,
) -> list[PATriple]:
    """One triple per (predicate, role, argument) of the given frames
    (the session's own gold frames by default).

    ``order_seed`` 0 yields the sorted canonical order; any other seed is
    a deterministic shuffle.
    """
    flat = flatten(session)
    if frames is None:
        frames = session.frames

    def text(span) -> tuple[str, ...]:
        start, end = flat_index(flat, span)
        return tuple(item.text for item in flat.items[start:end])

    triples = [
        PATriple(text(frame.predicate), role, text(span))
        for frame in frames
        for role, span in frame.arguments
    ]
    if order_seed == 0:
        triples.sort(key=lambda t: (t.predicate_text, t.role, t.argument_text))
    else:
        random.Random(order_seed).shuffle(triples)
    return triples


@dataclass(frozen=True)
class LinearizedInput:
    """The concatenated Z|C|R sequence with per-token annotations and the
    structured attention mask (True = may attend)."""

    tokens: tuple[str, ...]
    segments: tuple[str, ...]
    positions: tuple[int, ...]
    regions: tuple[str, ...]
    triple_ids: tuple[int | None, ...]
    mask_kind: MaskKind
    attend_z: bool
    mask: np.ndarray

    def __len__(self) -> int:
        return len(self.tokens)

    def region_slice(self, region: str) -> slice:
        idx = [i for i, r in enumerate(self.regions) if r == region]
        if not idx:
            return slice(0, 0)
        return slice(idx[0], idx[-1] + 1)

    def to_json_dict(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "segments": list(self.segments),
            "positions": list(self.positions),
            "regions": list(self.regions),
            "mask_rle": [_rle_encode(row) for row in self.mask],
        }


def _rle_encode(row: np.ndarray) -> list[int]:
    # run lengths alternating False/True, starting with False
    runs: list[int] = []
    current = False
    count = 0
    for value in row:
        if bool(value) == current:
            count += 1
        else:
            runs.append(count)
            current = bool(value)
            count = 1
    runs.append(count)
    return runs


def rle_decode(runs: Sequence[int]) -> np.ndarray:
    parts = []
    value = False
    for count in runs:
        parts.extend([value] * count)
        value = not value
    return np.array(parts, dtype=bool)


def build_mask(
    regions: Sequence[str],
    triple_ids: Sequence[int | None],
    mask_kind: MaskKind,
    attend_z: bool = True,
) -> np.ndarray:
    """Region-structured boolean attention mask.

    R rows see all of Z (unless ``attend_z`` is off) and C plus R up to
    their own index; C rows see Z (same switch) and all of C; Z rows see
    their own triple under "triple" or all of Z under "bi", and nothing
    outside Z. Every row keeps self-attention.
    """
    if mask_kind not in ("bi", "triple"):
        raise ValueError(f"unknown mask kind {mask_kind!r}")
    n = len(regions)
    is_z = np.array([r == "Z" for r in regions])
    is_c = np.array([r == "C" for r in regions])
    is_r = np.array([r == "R" for r in regions])
    mask = np.zeros((n, n), dtype=bool)

    if is_z.any():
        if mask_kind == "bi":
            mask[np.ix_(is_z, is_z)] = True
        else:
            ids = np.array([-1 if t is None else t for t in triple_ids])
            z_idx = np.flatnonzero(is_z)
            same = ids[z_idx][:, None] == ids[z_idx][None, :]
            mask[np.ix_(is_z, is_z)] = same
    if is_c.any():
        mask[np.ix_(is_c, is_c)] = True
        if attend_z:
            mask[np.ix_(is_c, is_z)] = True
    if is_r.any():
        mask[np.ix_(is_r, is_c)] = True
        if attend_z:
            mask[np.ix_(is_r, is_z)] = True
        r_idx = np.flatnonzero(is_r)
        lower = r_idx[:, None] >= r_idx[None, :]
        mask[np.ix_(is_r, is_r)] = lower
    return mask


def linearize(
    triples: Sequence[PATriple],
    context_utterances: Sequence[Utterance],
    response_tokens: Sequence[str] | None,
    mask_kind: MaskKind = "triple",
    response_speaker: str | None = None,
    attend_z: bool = True,
) -> LinearizedInput:
    """Assemble the Z|C|R input sequence.

    ``response_tokens`` may be None (decoding not yet started): the R
    region is then just [BOS]. ``response_speaker`` defaults to the last
    context utterance's speaker and decides which context turns get the
    same-speaker segment type.
    """
    if not context_utterances:
        raise ValueError("context must contain at least one utterance")
    if response_speaker is None:
        response_speaker = context_utterances[-1].speaker

    reserved = {EOS_TOKEN, BOS_TOKEN}
    tokens: list[str] = []
    segments: list[str] = []
    positions: list[int] = []
    regions: list[str] = []
    triple_ids: list[int | None] = []

    def push(
        text: str, segment: str, position: int, region: str, triple: int | None
    ) -> None:
        tokens.append(text)
        segments.append(segment)
        positions.append(position)
        regions.append(region)
        triple_ids.append(triple)

    for ti, triple in enumerate(triples):
        for pos, tok in enumerate(triple.tokens()):
            if tok in reserved:
                raise ValueError(f"reserved token {tok!r} inside triple {ti}")
            push(tok, SEGMENT_SRL, pos, "Z", ti)

    for utt in context_utterances:
        segment = SEGMENT_A if utt.speaker == response_speaker else SEGMENT_B
        for pos, tok in enumerate(utt.tokens):
            if tok in reserved:
                raise ValueError(f"reserved token {tok!r} inside context")
            push(tok, segment, pos, "C", None)
        push(EOS_TOKEN, segment, len(utt.tokens), "C", None)

    push(BOS_TOKEN, SEGMENT_A, 0, "R", None)
    for pos, tok in enumerate(response_tokens or (), start=1):
        if tok in reserved and tok != EOS_TOKEN:
            raise ValueError(f"reserved token {tok!r} inside response")
        push(tok, SEGMENT_A, pos, "R", None)

    mask = build_mask(regions, triple_ids, mask_kind, attend_z)
    return LinearizedInput(
        tokens=tuple(tokens),
        segments=tuple(segments),
        positions=tuple(positions),
        regions=tuple(regions),
        triple_ids=tuple(triple_ids),
        mask_kind=mask_kind,
        attend_z=attend_z,
        mask=mask,
    )


def strip_context(linearized: LinearizedInput) -> list[list[str]]:
    """Recover the context utterances' token lists from the C region by
    splitting on [EOS]."""
    out: list[list[str]] = []
    current: list[str] = []
    for tok, region in zip(linearized.tokens, linearized.regions):
        if region != "C":
            continue
        if tok == EOS_TOKEN:
            out.append(current)
            current = []
        else:
            current.append(tok)
    return out

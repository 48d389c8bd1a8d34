"""Lossless conversion between frames and per-token BIO label sequences.

Labels are rendered strings: ``"O"``, ``"B-<ROLE>"`` or ``"I-<ROLE>"``,
one per flattened-dialogue position. Predicate tokens are tagged ``O`` in
gold encodings; the predicate channel is the indicator feature, not the
tags. A parallel role-free scheme (``O``/``B``/``I``) covers entity
mention spans.
"""

from __future__ import annotations

from typing import Sequence

from .dialogue import ROLES, CsrlError, FlatDialogue, Frame, Span, flat_index, span_of

MENTION_LABELS: tuple[str, ...] = ("O", "B", "I")


def label_vocabulary() -> list[str]:
    """All 19 role labels in a fixed order: ``O`` first, then the B-/I-
    pair of each role in enumeration order."""
    vocab = ["O"]
    for role in ROLES:
        vocab.append(f"B-{role}")
        vocab.append(f"I-{role}")
    return vocab


def split_label(label: str) -> tuple[str, str | None]:
    """Split a rendered label into (kind, role); role is None for ``O``."""
    if label == "O":
        return "O", None
    kind, _, role = label.partition("-")
    if kind not in ("B", "I") or role not in ROLES:
        raise ValueError(f"malformed BIO label {label!r}")
    return kind, role


def encode_frame(flat: FlatDialogue, frame: Frame) -> list[str]:
    """BIO-encode one frame's arguments over the flattened dialogue.

    Raises :class:`CsrlError` on overlapping arguments (naming both
    roles) or on a role realized by more than one span.
    """
    tags = ["O"] * len(flat)
    owner: list[str | None] = [None] * len(flat)
    seen: set[str] = set()
    for role, span in frame.arguments:
        if role in seen:
            raise CsrlError(f"role {role} appears twice in one frame")
        seen.add(role)
        start, end = flat_index(flat, span)
        for i in range(start, end):
            if owner[i] is not None:
                raise CsrlError(
                    f"arguments {owner[i]} and {role} overlap at flat position {i}"
                )
            owner[i] = role
        tags[start] = f"B-{role}"
        for i in range(start + 1, end):
            tags[i] = f"I-{role}"
    return tags


def decode_tags(tags: Sequence[str], flat: FlatDialogue) -> list[tuple[str, Span]]:
    """Recover (role, span) pairs from a BIO sequence, leniently.

    Repair rules for malformed predictions: a stray ``I-x`` with no
    preceding ``B-x``/``I-x`` is promoted to ``B-x``; ``I-y`` following a
    run of ``x`` (y != x) starts a new ``y`` span. Runs are additionally
    split wherever they would cross a turn boundary or mix a marker item
    with token items, so every decoded span is a valid :class:`Span`.
    """
    if len(tags) != len(flat):
        raise ValueError(
            f"tag sequence length {len(tags)} != flattened length {len(flat)}"
        )
    out: list[tuple[str, Span]] = []
    run_role: str | None = None
    run_start = 0

    def close(end: int) -> None:
        nonlocal run_role
        if run_role is not None:
            out.append((run_role, span_of(flat, run_start, end)))
            run_role = None

    for i, label in enumerate(tags):
        kind, role = split_label(label)
        item = flat.items[i]
        boundary = i > 0 and (
            item.turn != flat.items[i - 1].turn
            or item.is_marker != flat.items[i - 1].is_marker
        )
        if kind == "O":
            close(i)
        elif kind == "B" or role != run_role or boundary:
            close(i)
            run_role = role
            run_start = i
    close(len(tags))
    return out


def encode_mentions(flat: FlatDialogue, mentions: Sequence[Span]) -> list[str]:
    """Role-free BIO over mention spans.

    Overlaps are resolved by keeping the longer span, breaking ties
    toward the earlier one; losers are dropped entirely.
    """
    ranges = []
    for span in mentions:
        start, end = flat_index(flat, span)
        ranges.append((start, end))
    ranges.sort(key=lambda r: (-(r[1] - r[0]), r[0]))
    tags = ["O"] * len(flat)
    taken: list[bool] = [False] * len(flat)
    for start, end in ranges:
        if any(taken[start:end]):
            continue
        for i in range(start, end):
            taken[i] = True
        tags[start] = "B"
        for i in range(start + 1, end):
            tags[i] = "I"
    return tags


def decode_mention_tags(tags: Sequence[str], flat: FlatDialogue) -> list[Span]:
    """Inverse of :func:`encode_mentions` with the same lenient repair and
    boundary splitting as :func:`decode_tags`."""
    role_tags = [t if t == "O" else f"{t}-ARG0" for t in tags]
    return [span for _, span in decode_tags(role_tags, flat)]

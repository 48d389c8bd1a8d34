"""Adapter for paragraph-indexed dialogue SRL releases.

The published annotation dumps for the chit-chat corpora index spans into
the speaker-token-prefixed *paragraph* (the concatenation of all turns,
with a speaker token heading each turn) rather than into individual
utterances. This module converts that family of records into the
canonical session format.

Expected record shape (one JSON object per line)::

    {"id": "...",                      # optional; a counter otherwise
     "dialogue": ["A w1 w2", "B w3"],  # speaker-prefixed, space-tokenized
     "srl": [{"pred": [3, 4],          # paragraph half-open ranges
              "args": [["ARG0", 1, 2], ...]}, ...]}

Alternative key spellings seen in the wild are accepted: ``turns`` /
``sentences`` for the dialogue and ``frames`` for the annotations; an
argument hitting a speaker-token position becomes a speaker-marker span.

The mapping was written against this documented family and validates
every index; records that do not fit raise :class:`AdapterError` naming
the first unrecognized structure instead of guessing.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator, Sequence

from ..dialogue import DialogueSession, Frame, Span, Utterance

SPEAKER_TOKENS = ("A", "B")


class AdapterError(ValueError):
    pass


def _dialogue_field(record: dict) -> list[str]:
    for key in ("dialogue", "turns", "sentences"):
        if key in record:
            value = record[key]
            if isinstance(value, list) and all(isinstance(v, str) for v in value):
                return value
            raise AdapterError(f"field {key!r} must be a list of strings")
    raise AdapterError("no dialogue field (tried: dialogue, turns, sentences)")


def _srl_field(record: dict) -> list:
    for key in ("srl", "frames", "annotations"):
        if key in record:
            return record[key] or []
    return []


def _frame_ranges(entry) -> tuple[tuple[int, int], list[tuple[str, int, int]]]:
    if isinstance(entry, dict):
        pred = entry.get("pred", entry.get("predicate"))
        args = entry.get("args", entry.get("arguments", []))
    elif isinstance(entry, (list, tuple)) and len(entry) == 2:
        pred, args = entry
    else:
        raise AdapterError(f"unrecognized frame entry: {entry!r}")
    if not (isinstance(pred, (list, tuple)) and len(pred) == 2):
        raise AdapterError(f"predicate must be a [start, end) pair, got {pred!r}")
    norm_args = []
    for arg in args:
        if isinstance(arg, dict):
            norm_args.append((arg["role"], int(arg["start"]), int(arg["end"])))
        elif isinstance(arg, (list, tuple)) and len(arg) == 3:
            role, start, end = arg
            norm_args.append((str(role), int(start), int(end)))
        else:
            raise AdapterError(f"unrecognized argument entry: {arg!r}")
    return (int(pred[0]), int(pred[1])), norm_args


class _ParagraphIndex:
    """Maps paragraph token positions back to (turn, within-turn) slots,
    where position 0 of each turn is its speaker token."""

    def __init__(self, token_lists: Sequence[Sequence[str]]):
        self.offsets = []
        offset = 0
        for tokens in token_lists:
            self.offsets.append(offset)
            offset += len(tokens) + 1
        self.total = offset
        self.lengths = [len(t) for t in token_lists]

    def locate(self, start: int, end: int) -> Span:
        if not (0 <= start < end <= self.total):
            raise AdapterError(f"paragraph range ({start}, {end}) out of bounds")
        turn = max(t for t, off in enumerate(self.offsets) if off <= start)
        within_start = start - self.offsets[turn]
        within_end = end - self.offsets[turn]
        if within_start == 0:
            if end != start + 1:
                raise AdapterError(
                    f"range ({start}, {end}) covers a speaker token plus content"
                )
            return Span(turn, 0, 0, is_speaker_marker=True)
        if within_end > self.lengths[turn] + 1:
            raise AdapterError(f"range ({start}, {end}) crosses a turn boundary")
        return Span(turn, within_start - 1, within_end - 1)


def convert_record(record: dict, fallback_id: str) -> DialogueSession:
    raw_turns = _dialogue_field(record)
    if not raw_turns:
        raise AdapterError("empty dialogue")
    token_lists: list[list[str]] = []
    speakers: list[str] = []
    for i, raw in enumerate(raw_turns):
        tokens = raw.split()
        if not tokens:
            raise AdapterError(f"turn {i} is empty")
        if tokens[0] in SPEAKER_TOKENS:
            speakers.append(tokens[0])
            tokens = tokens[1:]
        else:
            speakers.append(SPEAKER_TOKENS[i % 2])
        if not tokens:
            raise AdapterError(f"turn {i} has a speaker token but no content")
        token_lists.append(tokens)
    # normalize so the session opens with speaker A
    if speakers[0] == "B":
        speakers = ["A" if s == "B" else "B" for s in speakers]

    index = _ParagraphIndex(token_lists)
    frames = []
    for entry in _srl_field(record):
        (p_start, p_end), args = _frame_ranges(entry)
        predicate = index.locate(p_start, p_end)
        if predicate.is_speaker_marker:
            raise AdapterError("predicate falls on a speaker token")
        arguments = [
            (role, index.locate(a_start, a_end)) for role, a_start, a_end in args
        ]
        frames.append(Frame(predicate, arguments))

    session_id = str(record.get("id", record.get("session_id", fallback_id)))
    utterances = [Utterance(s, t) for s, t in zip(speakers, token_lists)]
    return DialogueSession(session_id, utterances, frames)


def convert_file(path: str | Path) -> Iterator[DialogueSession]:
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AdapterError(f"line {i + 1}: invalid JSON: {exc}") from exc
            try:
                yield convert_record(record, fallback_id=f"duconv{i:05d}")
            except AdapterError as exc:
                raise AdapterError(f"line {i + 1}: {exc}") from exc

"""JSONL session records: the canonical on-disk corpus format.

One JSON object per line::

    {"session_id": "...",
     "turns": [{"speaker": "A", "tokens": ["...", ...]}, ...],
     "frames": [{"predicate": {"turn": 0, "start": 1, "end": 2},
                 "arguments": [{"role": "ARG0", "turn": 0, "start": 0,
                                "end": 1, "is_speaker_marker": false}]}],
     "mentions": [{"turn": 0, "start": 0, "end": 1}]}

Indices are within-turn and end-exclusive; speaker-marker argument spans
carry ``is_speaker_marker: true`` with ``start == end == 0``. Unknown
top-level fields survive a read/write round trip. Writes are atomic
(temp file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .dialogue import DialogueSession, Frame, Span, Utterance

_KNOWN_KEYS = {"session_id", "turns", "frames", "mentions"}


class ParseError(ValueError):
    """A malformed record, annotated with its 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def _span_from_dict(data: dict, line_number: int, what: str) -> Span:
    try:
        return Span(
            turn=int(data["turn"]),
            start=int(data["start"]),
            end=int(data["end"]),
            is_speaker_marker=bool(data.get("is_speaker_marker", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(line_number, f"bad {what} span {data!r}: {exc}") from exc


def session_from_dict(data: dict, line_number: int = 0) -> DialogueSession:
    try:
        session_id = data["session_id"]
        turns = data["turns"]
    except KeyError as exc:
        raise ParseError(line_number, f"missing field {exc}") from exc
    if not isinstance(turns, list) or not turns:
        raise ParseError(line_number, "turns must be a non-empty list")
    try:
        utterances = [
            Utterance(t["speaker"], [str(tok) for tok in t["tokens"]]) for t in turns
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(line_number, f"bad turn: {exc}") from exc
    frames = []
    for fd in data.get("frames", []):
        try:
            predicate = _span_from_dict(fd["predicate"], line_number, "predicate")
            arguments = [
                (a["role"], _span_from_dict(a, line_number, "argument"))
                for a in fd.get("arguments", [])
            ]
            frames.append(Frame(predicate, arguments))
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(line_number, f"bad frame {fd!r}: {exc}") from exc
    mentions = None
    if "mentions" in data and data["mentions"] is not None:
        mentions = [
            _span_from_dict(m, line_number, "mention") for m in data["mentions"]
        ]
    extra = {k: v for k, v in data.items() if k not in _KNOWN_KEYS}
    try:
        return DialogueSession(str(session_id), utterances, frames, mentions, extra)
    except ValueError as exc:
        raise ParseError(line_number, str(exc)) from exc


def _span_to_dict(span: Span) -> dict:
    out = {"turn": span.turn, "start": span.start, "end": span.end}
    if span.is_speaker_marker:
        out["is_speaker_marker"] = True
    return out


def session_to_dict(
    session: DialogueSession, frames: Sequence[Frame] | None = None
) -> dict:
    """Wire-format dict; ``frames`` overrides the session's own (used to
    emit predictions)."""
    if frames is None:
        frames = session.frames
    out: dict = {
        "session_id": session.session_id,
        "turns": [
            {"speaker": u.speaker, "tokens": list(u.tokens)}
            for u in session.utterances
        ],
        "frames": [
            {
                "predicate": _span_to_dict(f.predicate),
                "arguments": [
                    {"role": role, **_span_to_dict(span)}
                    for role, span in f.arguments
                ],
            }
            for f in frames
        ],
    }
    if session.mentions is not None:
        out["mentions"] = [_span_to_dict(m) for m in session.mentions]
    out.update(session.extra)
    return out


def read_sessions(path: str | Path) -> list[DialogueSession]:
    """Read a JSONL corpus; raises :class:`ParseError` with the offending
    line number on malformed input."""
    sessions = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_number, f"invalid JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise ParseError(line_number, "record must be a JSON object")
            sessions.append(session_from_dict(data, line_number))
    return sessions


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    """Atomically write JSON objects one per line."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_sessions(path: str | Path, sessions: Sequence[DialogueSession]) -> None:
    write_jsonl(path, (session_to_dict(s) for s in sessions))


def split_fraction(session_id: str, seed: int) -> float:
    """Stable hash of (session_id, seed) mapped into [0, 1); drives the
    deterministic train/dev/test partition."""
    digest = hashlib.sha256(f"{session_id}\x00{seed}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def partition_sessions(
    sessions: Sequence[DialogueSession],
    seed: int,
    train: float = 0.8,
    dev: float = 0.1,
) -> tuple[list[DialogueSession], list[DialogueSession], list[DialogueSession]]:
    """Seeded 80/10/10-style split over session-id hashes."""
    if not (0 < train < 1) or dev < 0 or train + dev > 1:
        raise ValueError("fractions must satisfy 0 < train, 0 <= dev, train+dev <= 1")
    splits: tuple[list, list, list] = ([], [], [])
    for session in sessions:
        x = split_fraction(session.session_id, seed)
        if x < train:
            splits[0].append(session)
        elif x < train + dev:
            splits[1].append(session)
        else:
            splits[2].append(session)
    return splits

"""Dialogue data model for conversational semantic role labeling.

A dialogue session is a sequence of pre-tokenized utterances by two
speakers A and B, annotated with predicate-argument frames whose argument
spans may live in the predicate's own turn, in an earlier turn, or be one
of the speakers themselves (encoded as a speaker-marker span).

All types are immutable after construction and every operation here is a
pure function, so everything is safe to share across threads.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Literal, Sequence

# Numbered roles plus the four adjuncts used for dialogue annotation.
ROLES: tuple[str, ...] = (
    "ARG0",
    "ARG1",
    "ARG2",
    "ARG3",
    "ARG4",
    "AM-TMP",
    "AM-LOC",
    "AM-PRP",
    "AM-NEG",
)

_ROLE_SET = frozenset(ROLES)

SPEAKERS: tuple[str, str] = ("A", "B")

#: Reserved marker tokens prefixed to each turn when flattening. The first
#: speaker of a session is always rendered "A".
DEFAULT_MARKERS: tuple[str, str] = ("[A]", "[B]")

Locality = Literal["intra", "cross"]


class CsrlError(Exception):
    """Base class for errors raised by this package."""


def parse_role(value: str) -> str:
    """Return ``value`` if it is one of the nine known roles, else raise."""
    if value not in _ROLE_SET:
        raise ValueError(f"unknown semantic role {value!r}; expected one of {ROLES}")
    return value


@dataclass(frozen=True)
class Span:
    """A within-turn token range, half-open, or a speaker-marker reference.

    ``start``/``end`` index tokens of utterance ``turn`` (end exclusive).
    A speaker-marker span has ``start == end == 0`` and denotes the marker
    token prefixed to that turn, i.e. the speaker of the turn itself.
    """

    turn: int
    start: int
    end: int
    is_speaker_marker: bool = False

    def __post_init__(self) -> None:
        if self.turn < 0 or self.start < 0 or self.end < 0:
            raise ValueError(f"negative span index: {self}")

    @property
    def length(self) -> int:
        return 1 if self.is_speaker_marker else self.end - self.start


@dataclass(frozen=True)
class Utterance:
    speaker: str
    tokens: tuple[str, ...]

    def __init__(self, speaker: str, tokens: Sequence[str]):
        if speaker not in SPEAKERS:
            raise ValueError(f"speaker must be one of {SPEAKERS}, got {speaker!r}")
        if len(tokens) == 0:
            raise ValueError("utterance must contain at least one token")
        object.__setattr__(self, "speaker", speaker)
        object.__setattr__(self, "tokens", tuple(tokens))


@dataclass(frozen=True)
class Frame:
    """One predicate span plus its role-labeled argument spans."""

    predicate: Span
    arguments: tuple[tuple[str, Span], ...]

    def __init__(self, predicate: Span, arguments: Iterable[tuple[str, Span]] = ()):
        args = tuple((parse_role(role), span) for role, span in arguments)
        object.__setattr__(self, "predicate", predicate)
        object.__setattr__(self, "arguments", args)


@dataclass(frozen=True)
class DialogueSession:
    """A multi-turn two-party dialogue with gold frames.

    ``mentions`` optionally carries knowledge-base entity mention spans
    used as auxiliary span supervision; ``None`` means no mention
    annotation exists for the session (an empty list means "annotated,
    nothing found"). ``extra`` preserves unknown wire-format fields across
    read/write round trips and takes no part in any computation.
    """

    session_id: str
    utterances: tuple[Utterance, ...]
    frames: tuple[Frame, ...] = ()
    mentions: tuple[Span, ...] | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __init__(
        self,
        session_id: str,
        utterances: Sequence[Utterance],
        frames: Iterable[Frame] = (),
        mentions: Iterable[Span] | None = None,
        extra: dict | None = None,
    ):
        utts = tuple(utterances)
        if not utts:
            raise ValueError("a session needs at least one utterance")
        if utts[0].speaker != "A":
            raise ValueError("the first utterance of a session must be by speaker A")
        object.__setattr__(self, "session_id", session_id)
        object.__setattr__(self, "utterances", utts)
        object.__setattr__(self, "frames", tuple(frames))
        object.__setattr__(
            self, "mentions", None if mentions is None else tuple(mentions)
        )
        object.__setattr__(self, "extra", dict(extra) if extra else {})

    @property
    def n_turns(self) -> int:
        return len(self.utterances)


@dataclass(frozen=True)
class FlatItem:
    """One position of the flattened dialogue stream.

    ``within_pos`` is the 0-based token index inside its utterance and is
    ``None`` for marker items.
    """

    text: str
    turn: int
    speaker: str
    is_marker: bool
    within_pos: int | None


@dataclass(frozen=True)
class FlatDialogue:
    """The marker-prefixed concatenation of a session's utterances.

    ``turn_offsets[t]`` is the flat index of turn ``t``'s marker item; the
    turn's tokens follow immediately after it.
    """

    session_id: str
    items: tuple[FlatItem, ...]
    turn_offsets: tuple[int, ...]
    turn_lengths: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.items)

    @property
    def n_turns(self) -> int:
        return len(self.turn_offsets)


class ViolationKind(Enum):
    FUTURE_ARGUMENT = "FutureArgument"
    OVERLAP = "Overlap"
    OUT_OF_BOUNDS = "OutOfBounds"
    BAD_MARKER_SPAN = "BadMarkerSpan"
    DUPLICATE_ROLE = "DuplicateRole"
    RESERVED_TOKEN = "ReservedToken"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    session_id: str
    frame_index: int | None
    detail: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "session_id": self.session_id,
            "frame_index": self.frame_index,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class DatasetStats:
    """Corpus-level argument statistics, percentages in [0, 100]."""

    role_proportion: dict[str, float]
    role_cross_ratio: dict[str, float]
    cross_argument_ratio: float
    speaker_argument_ratio: float
    avg_turns: float
    avg_tokens: float
    predicate_count: int
    utterance_count: int
    session_count: int

    def to_dict(self) -> dict:
        return {
            "role_proportion": dict(self.role_proportion),
            "role_cross_ratio": dict(self.role_cross_ratio),
            "cross_argument_ratio": self.cross_argument_ratio,
            "speaker_argument_ratio": self.speaker_argument_ratio,
            "avg_turns": self.avg_turns,
            "avg_tokens": self.avg_tokens,
            "predicate_count": self.predicate_count,
            "utterance_count": self.utterance_count,
            "session_count": self.session_count,
        }


def marker_for(speaker: str, markers: tuple[str, str] = DEFAULT_MARKERS) -> str:
    return markers[SPEAKERS.index(speaker)]


def flatten(
    session: DialogueSession, markers: tuple[str, str] = DEFAULT_MARKERS
) -> FlatDialogue:
    """Concatenate the session's utterances, prefixing each turn with its
    speaker's marker token.

    The flattened length is the total token count plus one marker per
    turn. Raises :class:`CsrlError` if a real token collides with a
    reserved marker string.
    """
    items: list[FlatItem] = []
    offsets: list[int] = []
    lengths: list[int] = []
    for turn, utt in enumerate(session.utterances):
        offsets.append(len(items))
        lengths.append(len(utt.tokens))
        items.append(
            FlatItem(marker_for(utt.speaker, markers), turn, utt.speaker, True, None)
        )
        for pos, tok in enumerate(utt.tokens):
            if tok in markers:
                raise CsrlError(
                    f"reserved marker token {tok!r} occurs as a real token "
                    f"at turn {turn}, position {pos}"
                )
            items.append(FlatItem(tok, turn, utt.speaker, False, pos))
    return FlatDialogue(session.session_id, tuple(items), tuple(offsets), tuple(lengths))


def flat_index(flat: FlatDialogue, span: Span) -> tuple[int, int]:
    """Map a within-turn span to its half-open range of flat indices.

    A speaker-marker span maps to the single marker item heading its turn.
    """
    if span.turn >= flat.n_turns:
        raise IndexError(f"span turn {span.turn} out of range (T={flat.n_turns})")
    offset = flat.turn_offsets[span.turn]
    if span.is_speaker_marker:
        if span.start != 0 or span.end != 0:
            raise ValueError(f"malformed speaker-marker span: {span}")
        return offset, offset + 1
    if not (0 <= span.start < span.end <= flat.turn_lengths[span.turn]):
        raise IndexError(
            f"span {span} out of bounds for turn of length "
            f"{flat.turn_lengths[span.turn]}"
        )
    return offset + 1 + span.start, offset + 1 + span.end


def span_of(flat: FlatDialogue, start: int, end: int) -> Span:
    """Recover the :class:`Span` covering flat positions [start, end).

    Inverse of :func:`flat_index`: the range must be exactly one marker
    item, or a run of token items inside a single turn.
    """
    if not (0 <= start < end <= len(flat.items)):
        raise IndexError(f"flat range ({start}, {end}) out of bounds (N={len(flat)})")
    first = flat.items[start]
    if first.is_marker:
        if end != start + 1:
            raise ValueError(
                f"range ({start}, {end}) mixes a marker with other items"
            )
        return Span(first.turn, 0, 0, is_speaker_marker=True)
    for item in flat.items[start:end]:
        if item.is_marker or item.turn != first.turn:
            raise ValueError(
                f"range ({start}, {end}) crosses a turn or marker boundary"
            )
    last = flat.items[end - 1]
    assert first.within_pos is not None and last.within_pos is not None
    return Span(first.turn, first.within_pos, last.within_pos + 1)


def turn_distance(flat: FlatDialogue, predicate: Span, item_index: int) -> int:
    """Turn offset from an item to the predicate: predicate turn minus the
    item's turn. Positive for earlier turns, negative for later ones."""
    if not (0 <= item_index < len(flat.items)):
        raise IndexError(f"item index {item_index} out of bounds (N={len(flat)})")
    if predicate.turn >= flat.n_turns:
        raise IndexError(f"predicate turn {predicate.turn} out of range")
    return predicate.turn - flat.items[item_index].turn


def classify_argument(frame: Frame, role_span: Span) -> Locality:
    """Intra iff the argument lives in the predicate's own turn.

    Speaker-marker arguments are classified by the turn their marker
    heads.
    """
    return "intra" if role_span.turn == frame.predicate.turn else "cross"


def _check_span_bounds(session: DialogueSession, span: Span) -> str | None:
    if span.turn >= session.n_turns:
        return f"turn {span.turn} out of range (T={session.n_turns})"
    if span.is_speaker_marker:
        return None
    n = len(session.utterances[span.turn].tokens)
    if not (0 <= span.start < span.end <= n):
        return f"token range ({span.start}, {span.end}) invalid for turn of length {n}"
    return None


def _flat_range_unchecked(session: DialogueSession, span: Span) -> tuple[int, int]:
    # Bounds already verified; avoids building a FlatDialogue per frame.
    offset = sum(len(u.tokens) + 1 for u in session.utterances[: span.turn])
    if span.is_speaker_marker:
        return offset, offset + 1
    return offset + 1 + span.start, offset + 1 + span.end


def validate_session(
    session: DialogueSession, markers: tuple[str, str] = DEFAULT_MARKERS
) -> list[Violation]:
    """Check every machine-decidable annotation criterion.

    Returns one :class:`Violation` per breach; an empty list means the
    session is valid. Checked: arguments in turns after their predicate,
    overlapping spans within a frame (on flattened positions, predicate
    included), spans out of bounds, malformed speaker-marker spans,
    duplicate roles within a frame, and reserved marker strings occurring
    as real tokens.
    """
    sid = session.session_id
    out: list[Violation] = []

    for turn, utt in enumerate(session.utterances):
        for pos, tok in enumerate(utt.tokens):
            if tok in markers:
                out.append(
                    Violation(
                        ViolationKind.RESERVED_TOKEN,
                        sid,
                        None,
                        f"reserved token {tok!r} at turn {turn}, position {pos}",
                    )
                )

    def check_marker_form(fi: int, name: str, span: Span) -> bool:
        if span.is_speaker_marker and (span.start != 0 or span.end != 0):
            out.append(
                Violation(
                    ViolationKind.BAD_MARKER_SPAN,
                    sid,
                    fi,
                    f"{name} marker span must have start=end=0, got {span}",
                )
            )
            return False
        return True

    for fi, frame in enumerate(session.frames):
        spans: list[tuple[str, Span]] = [("predicate", frame.predicate)]
        spans.extend(frame.arguments)

        if frame.predicate.is_speaker_marker:
            out.append(
                Violation(
                    ViolationKind.BAD_MARKER_SPAN,
                    sid,
                    fi,
                    "predicate must be a token span, not a speaker marker",
                )
            )
            continue

        ok: list[tuple[str, Span]] = []
        for name, span in spans:
            if not check_marker_form(fi, name, span):
                continue
            problem = _check_span_bounds(session, span)
            if problem is not None:
                out.append(
                    Violation(ViolationKind.OUT_OF_BOUNDS, sid, fi, f"{name}: {problem}")
                )
                continue
            ok.append((name, span))

        seen_roles: set[str] = set()
        for name, span in ok[1:]:
            if name in seen_roles:
                out.append(
                    Violation(
                        ViolationKind.DUPLICATE_ROLE,
                        sid,
                        fi,
                        f"role {name} appears more than once",
                    )
                )
            seen_roles.add(name)
            if span.turn > frame.predicate.turn:
                out.append(
                    Violation(
                        ViolationKind.FUTURE_ARGUMENT,
                        sid,
                        fi,
                        f"{name} in turn {span.turn} follows predicate turn "
                        f"{frame.predicate.turn}",
                    )
                )

        ranges = [(name, _flat_range_unchecked(session, span)) for name, span in ok]
        for i in range(len(ranges)):
            for j in range(i + 1, len(ranges)):
                (na, (sa, ea)), (nb, (sb, eb)) = ranges[i], ranges[j]
                if sa < eb and sb < ea:
                    out.append(
                        Violation(
                            ViolationKind.OVERLAP, sid, fi, f"{na} overlaps {nb}"
                        )
                    )
    return out


def compute_stats(sessions: Sequence[DialogueSession]) -> DatasetStats:
    """Corpus statistics over all argument instances.

    Proportions are per-role percentages of all arguments; a role's cross
    ratio is the percentage of that role's instances lying outside their
    predicate's turn (speaker markers counted by the turn their marker
    heads).
    """
    if not sessions:
        raise ValueError("cannot compute statistics over an empty corpus")
    role_total = {r: 0 for r in ROLES}
    role_cross = {r: 0 for r in ROLES}
    n_args = 0
    n_cross = 0
    n_marker = 0
    n_frames = 0
    for session in sessions:
        n_frames += len(session.frames)
        for frame in session.frames:
            for role, span in frame.arguments:
                n_args += 1
                role_total[role] += 1
                if classify_argument(frame, span) == "cross":
                    n_cross += 1
                    role_cross[role] += 1
                if span.is_speaker_marker:
                    n_marker += 1
    if n_args == 0:
        raise ValueError("corpus contains no argument instances")
    return DatasetStats(
        role_proportion={r: 100.0 * role_total[r] / n_args for r in ROLES},
        role_cross_ratio={
            r: (100.0 * role_cross[r] / role_total[r]) if role_total[r] else 0.0
            for r in ROLES
        },
        cross_argument_ratio=100.0 * n_cross / n_args,
        speaker_argument_ratio=100.0 * n_marker / n_args,
        avg_turns=statistics.fmean(s.n_turns for s in sessions),
        avg_tokens=statistics.fmean(
            sum(len(u.tokens) for u in s.utterances) for s in sessions
        ),
        predicate_count=n_frames,
        utterance_count=sum(s.n_turns for s in sessions),
        session_count=len(sessions),
    )

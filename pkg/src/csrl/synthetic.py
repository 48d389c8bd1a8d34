"""Deterministic synthetic dialogue corpora.

Used by the test suite, the overfit benchmarks, and the `rewrite-demo`
command. Everything is driven by a seeded :class:`random.Random`, so the
same seed always yields the same corpus.

The tagging corpus from :func:`toy_corpus` plants "decoy" turns: an
earlier utterance duplicated verbatim later in the dialogue by the same
speaker, with the gold cross-turn argument placed in the copy closest to
the predicate. Token content, within-utterance context, and speaker are
then identical for both copies, so only the dialog-turn feature can tell
them apart - which is what makes the corpus a sharp probe for the
turn-distance ablation.
"""

from __future__ import annotations

import random
from typing import Sequence

from .dialogue import DialogueSession, Frame, Span, Utterance, compute_stats
from .linearize import PATriple
from .rewriter import RewriteExample

CONTENT_VOCAB = tuple(f"w{i:02d}" for i in range(48))
PREDICATE_VOCAB = tuple(f"v{i}" for i in range(12))


def _speaker(turn: int) -> str:
    return "AB"[turn % 2]


def _flat_range(lengths: Sequence[int], span: Span) -> tuple[int, int]:
    offset = sum(n + 1 for n in lengths[: span.turn])
    if span.is_speaker_marker:
        return offset, offset + 1
    return offset + 1 + span.start, offset + 1 + span.end


def _disjoint(r: tuple[int, int], used: list[tuple[int, int]]) -> bool:
    return all(r[1] <= s or e <= r[0] for s, e in used)


def random_session(
    rng: random.Random,
    session_id: str,
    max_turns: int = 6,
    max_frames: int = 3,
    max_args: int = 4,
    marker_prob: float = 0.15,
    mention_prob: float = 0.5,
) -> DialogueSession:
    """A structurally valid random session for property tests.

    Frames respect all annotation criteria: arguments never follow their
    predicate's turn, never overlap within a frame, and speaker arguments
    are marker spans.
    """
    n_turns = rng.randint(1, max_turns)
    token_lists = [
        [rng.choice(CONTENT_VOCAB) for _ in range(rng.randint(1, 6))]
        for _ in range(n_turns)
    ]
    lengths = [len(t) for t in token_lists]

    frames: list[Frame] = []
    for _ in range(rng.randint(0, max_frames)):
        t = rng.randrange(n_turns)
        if lengths[t] == 0:
            continue
        p_len = 1 if lengths[t] == 1 or rng.random() < 0.8 else 2
        p_start = rng.randrange(lengths[t] - p_len + 1)
        predicate = Span(t, p_start, p_start + p_len)
        used = [_flat_range(lengths, predicate)]
        roles = rng.sample(
            ["ARG0", "ARG1", "ARG2", "ARG3", "ARG4", "AM-TMP", "AM-LOC", "AM-PRP", "AM-NEG"],
            rng.randint(0, max_args),
        )
        args: list[tuple[str, Span]] = []
        for role in roles:
            for _ in range(20):
                if rng.random() < marker_prob:
                    span = Span(rng.randint(0, t), 0, 0, is_speaker_marker=True)
                else:
                    j = rng.randint(0, t)
                    a_len = rng.randint(1, min(3, lengths[j]))
                    a_start = rng.randrange(lengths[j] - a_len + 1)
                    span = Span(j, a_start, a_start + a_len)
                r = _flat_range(lengths, span)
                if _disjoint(r, used):
                    used.append(r)
                    args.append((role, span))
                    break
        frames.append(Frame(predicate, args))

    mentions = None
    if rng.random() < mention_prob:
        mentions = []
        for _ in range(rng.randint(0, 3)):
            j = rng.randrange(n_turns)
            m_len = rng.randint(1, min(3, lengths[j]))
            m_start = rng.randrange(lengths[j] - m_len + 1)
            mentions.append(Span(j, m_start, m_start + m_len))

    utterances = [
        Utterance(_speaker(t), tokens) for t, tokens in enumerate(token_lists)
    ]
    return DialogueSession(session_id, utterances, frames, mentions)


def random_corpus(
    seed: int, n_sessions: int, **kwargs
) -> list[DialogueSession]:
    rng = random.Random(seed)
    return [random_session(rng, f"s{i:04d}", **kwargs) for i in range(n_sessions)]


def _place_span(
    rng: random.Random,
    lengths: Sequence[int],
    turn: int,
    used: list[tuple[int, int]],
    max_len: int = 2,
) -> Span | None:
    for _ in range(12):
        a_len = rng.randint(1, min(max_len, lengths[turn]))
        a_start = rng.randrange(lengths[turn] - a_len + 1)
        span = Span(turn, a_start, a_start + a_len)
        r = _flat_range(lengths, span)
        if _disjoint(r, used):
            used.append(r)
            return span
    return None


def toy_session(rng: random.Random, session_id: str) -> DialogueSession:
    n_turns = rng.choice([3, 4, 5])
    token_lists = [
        [rng.choice(CONTENT_VOCAB) for _ in range(rng.randint(3, 6))]
        for _ in range(n_turns)
    ]
    # decoy: turn 2 repeats turn 0 verbatim (same speaker A); predicates
    # are then confined to later turns so both copies precede them
    decoy = n_turns >= 4 and rng.random() < 0.8
    if decoy:
        token_lists[2] = list(token_lists[0])
        predicate_turns = list(range(3, n_turns))
    else:
        predicate_turns = list(range(1, n_turns))
    lengths = [len(t) for t in token_lists]

    frames: list[Frame] = []
    taken_predicates: set[tuple[int, int]] = set()
    for _ in range(rng.randint(2, 4)):
        # distinct predicate spans: two frames sharing one would demand
        # different gold tags for identical model inputs
        candidates = [
            (t, p)
            for t in predicate_turns
            for p in range(lengths[t])
            if (t, p) not in taken_predicates
        ]
        if not candidates:
            break
        t, p_start = rng.choice(candidates)
        taken_predicates.add((t, p_start))
        token_lists[t][p_start] = rng.choice(PREDICATE_VOCAB)
        predicate = Span(t, p_start, p_start + 1)
        used = [_flat_range(lengths, predicate)]
        args: list[tuple[str, Span]] = []
        roles = ["ARG0", "ARG1"] + (["AM-TMP"] if rng.random() < 0.25 else [])
        for role in roles:
            draw = rng.random()
            span: Span | None = None
            if draw < 0.18:
                m_turn = t if rng.random() < 0.5 else rng.randint(0, t)
                span = Span(m_turn, 0, 0, is_speaker_marker=True)
                r = _flat_range(lengths, span)
                span = span if _disjoint(r, used) else None
                if span is not None:
                    used.append(r)
            elif draw < 0.55:
                span = _place_span(rng, lengths, t, used)
            else:
                if decoy and t > 2 and rng.random() < 0.7:
                    span = _place_span(rng, lengths, 2, used)
                if span is None:
                    span = _place_span(rng, lengths, rng.randint(0, t - 1), used)
            if span is not None:
                args.append((role, span))
        frames.append(Frame(predicate, args))

    mentions = []
    seen: set[Span] = set()
    for frame in frames:
        for _, span in frame.arguments:
            if not span.is_speaker_marker and span not in seen:
                seen.add(span)
                mentions.append(span)

    utterances = [
        Utterance(_speaker(t), tokens) for t, tokens in enumerate(token_lists)
    ]
    return DialogueSession(session_id, utterances, frames, mentions)


def toy_corpus(
    seed: int = 7,
    n_sessions: int = 32,
    min_cross_percent: float = 30.0,
    min_marker_percent: float = 10.0,
) -> list[DialogueSession]:
    """The overfit benchmark corpus: small vocabulary, decoy turns, and
    guaranteed shares of cross-turn and speaker-marker arguments."""
    rng = random.Random(seed)
    sessions = [toy_session(rng, f"toy{i:03d}") for i in range(n_sessions)]
    stats = compute_stats(sessions)
    if stats.cross_argument_ratio < min_cross_percent:
        raise AssertionError(
            f"toy corpus cross ratio {stats.cross_argument_ratio:.1f}% below "
            f"{min_cross_percent}%; pick another seed"
        )
    if stats.speaker_argument_ratio < min_marker_percent:
        raise AssertionError(
            f"toy corpus speaker-argument ratio {stats.speaker_argument_ratio:.1f}% "
            f"below {min_marker_percent}%; pick another seed"
        )
    return sessions


def rewrite_demo_items(seed: int = 13, n_items: int = 8) -> list[RewriteExample]:
    """Small (context, triples, rewrite) set for the generation demo.

    Each item's rewrite restores the entity and object omitted from the
    final context utterance, so a model that uses the triples can emit
    the target verbatim.
    """
    rng = random.Random(seed)
    entities = rng.sample(CONTENT_VOCAB, n_items)
    objects = rng.sample(CONTENT_VOCAB, n_items)
    items: list[RewriteExample] = []
    for i in range(n_items):
        pred = PREDICATE_VOCAB[i % len(PREDICATE_VOCAB)]
        ent, obj = entities[i], objects[i]
        context = (
            Utterance("A", (ent, "brought", obj)),
            Utterance("B", (pred, "it", "then")),
        )
        triples = (
            PATriple((pred,), "ARG0", (ent,)),
            PATriple((pred,), "ARG1", (obj,)),
        )
        target = (ent, pred, obj, "then")
        items.append(RewriteExample(triples, context, target, "B"))
    return items

"""Shared generators and independent oracles for the test suite."""

from __future__ import annotations

import random

from csrl.dialogue import DialogueSession, flatten
from csrl.metrics import ArgTuple, EvalReport, SplitScores

ROLE_POOL = ["ARG0", "ARG1", "ARG2", "AM-TMP", "AM-LOC"]


def regroup(flat) -> list[list[str]]:
    """Rebuild per-turn token lists from a flattened dialogue, dropping
    markers; the round-trip oracle for flatten()."""
    turns: list[list[str]] = [[] for _ in range(flat.n_turns)]
    for item in flat.items:
        if not item.is_marker:
            turns[item.turn].append(item.text)
    return turns


def random_tuple_pool(rng: random.Random, size: int) -> list[ArgTuple]:
    """A pool of distinct argument tuples with consistent localities, to
    sample gold/pred sets from."""
    pool = []
    seen = set()
    while len(pool) < size:
        sid = f"s{rng.randint(0, 4)}"
        p_start = rng.randint(0, 30)
        predicate = (p_start, p_start + rng.randint(1, 2))
        a_start = rng.randint(0, 30)
        argument = (a_start, a_start + rng.randint(1, 3))
        role = rng.choice(ROLE_POOL)
        key = (sid, predicate, argument, role)
        if key in seen:
            continue
        seen.add(key)
        locality = rng.choice(["intra", "cross"])
        pool.append(ArgTuple(sid, predicate, argument, role, locality))
    return pool


def random_gold_pred(
    rng: random.Random, pool_size: int = 40
) -> tuple[set[ArgTuple], set[ArgTuple]]:
    pool = random_tuple_pool(rng, pool_size)
    gold = {t for t in pool if rng.random() < 0.5}
    pred = {t for t in pool if rng.random() < 0.5}
    return gold, pred


def oracle_f1_report(gold: set[ArgTuple], pred: set[ArgTuple]) -> EvalReport:
    """Brute-force reference scorer: explicit set intersections per split,
    kept independent of csrl.metrics internals."""

    def scores(g: set[ArgTuple], p: set[ArgTuple]) -> SplitScores:
        g_keys = {t.key() for t in g}
        p_keys = {t.key() for t in p}
        correct = len(g_keys & p_keys)
        precision = correct / len(p_keys) if p_keys else 0.0
        recall = correct / len(g_keys) if g_keys else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        return SplitScores(precision, recall, f1, len(g_keys), len(p_keys), correct)

    return EvalReport(
        all=scores(gold, pred),
        intra=scores(
            {t for t in gold if t.locality == "intra"},
            {t for t in pred if t.locality == "intra"},
        ),
        cross=scores(
            {t for t in gold if t.locality == "cross"},
            {t for t in pred if t.locality == "cross"},
        ),
    )


def all_frame_spans(session: DialogueSession):
    for frame in session.frames:
        yield frame.predicate
        for _, span in frame.arguments:
            yield span


def flat_of(session: DialogueSession):
    return flatten(session)

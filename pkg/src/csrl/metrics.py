"""Evaluation metrics.

Argument scoring is micro-averaged F1 over (predicate, argument, label)
tuples with exact span matching, reported for all arguments and for the
intra-/cross-turn subsets. Generation quality is scored with corpus BLEU,
ROUGE-1/2/L, exact match, and DISTINCT-n.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dialogue import (
    DialogueSession,
    Frame,
    Locality,
    classify_argument,
    flat_index,
    flatten,
)

TokenSeq = Sequence[str]


@dataclass(frozen=True)
class ArgTuple:
    """One scored argument: which predicate, which flat range, which role.

    Equality and hashing are exact on the predicate key, the argument
    range and the role; locality is derived from the spans and carried
    along for subset filtering only.
    """

    session_id: str
    predicate: tuple[int, int]
    argument: tuple[int, int]
    role: str
    locality: Locality = field(compare=False)

    def key(self) -> tuple:
        return (self.session_id, self.predicate, self.argument, self.role)


@dataclass(frozen=True)
class SplitScores:
    precision: float
    recall: float
    f1: float
    gold: int
    pred: int
    correct: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "gold": self.gold,
            "pred": self.pred,
            "correct": self.correct,
        }


@dataclass(frozen=True)
class EvalReport:
    all: SplitScores
    intra: SplitScores
    cross: SplitScores

    def to_dict(self, percent: bool = False) -> dict:
        scale = 100.0 if percent else 1.0
        out = {}
        for split in ("all", "intra", "cross"):
            scores: SplitScores = getattr(self, split)
            d = scores.to_dict()
            for k in ("precision", "recall", "f1"):
                d[k] = d[k] * scale
            out[split] = d
        return out


def frames_to_tuples(
    sessions: Sequence[DialogueSession],
    frames_by_session: Mapping[str, Sequence[Frame]],
) -> set[ArgTuple]:
    """One tuple per argument of every frame, with set semantics.

    ``frames_by_session`` maps session ids to the frames to score (gold
    or predicted); every key must name a session in ``sessions``.
    """
    by_id = {s.session_id: s for s in sessions}
    out: set[ArgTuple] = set()
    for sid, frames in frames_by_session.items():
        if sid not in by_id:
            raise KeyError(f"frames reference unknown session {sid!r}")
        flat = flatten(by_id[sid])
        for frame in frames:
            pred_range = flat_index(flat, frame.predicate)
            for role, span in frame.arguments:
                out.add(
                    ArgTuple(
                        session_id=sid,
                        predicate=pred_range,
                        argument=flat_index(flat, span),
                        role=role,
                        locality=classify_argument(frame, span),
                    )
                )
    return out


def gold_tuples(sessions: Sequence[DialogueSession]) -> set[ArgTuple]:
    return frames_to_tuples(sessions, {s.session_id: s.frames for s in sessions})


def _prf(gold: int, pred: int, correct: int) -> SplitScores:
    p = correct / pred if pred else 0.0
    r = correct / gold if gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return SplitScores(p, r, f1, gold, pred, correct)


def f1_report(gold: Iterable[ArgTuple], pred: Iterable[ArgTuple]) -> EvalReport:
    """Micro P/R/F1 over exact tuple matches, split by locality.

    A predicted tuple's locality comes from its own spans. Degenerate
    denominators yield 0, so an all-intra corpus reports 0 for the cross
    split with zero counts.
    """
    gold_keys = {t.key(): t for t in gold}
    pred_keys = {t.key(): t for t in pred}
    correct = gold_keys.keys() & pred_keys.keys()

    def split(loc: Locality | None) -> SplitScores:
        g = [k for k, t in gold_keys.items() if loc is None or t.locality == loc]
        p = [k for k, t in pred_keys.items() if loc is None or t.locality == loc]
        c = [k for k in correct if loc is None or gold_keys[k].locality == loc]
        return _prf(len(g), len(p), len(c))

    return EvalReport(all=split(None), intra=split("intra"), cross=split("cross"))


def _ngrams(tokens: TokenSeq, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    references: Sequence[TokenSeq],
    hypotheses: Sequence[TokenSeq],
    max_n: int = 4,
    smooth_eps: float | None = None,
) -> dict[int, float]:
    """Corpus BLEU-k for every k in 1..max_n.

    Modified n-gram precision with brevity penalty; BLEU-k is the
    geometric mean of precisions 1..k. With ``smooth_eps`` unset, any
    zero precision makes the score 0; when set, zero match counts are
    floored at ``smooth_eps``.
    """
    if len(references) != len(hypotheses):
        raise ValueError("references and hypotheses must have equal length")
    if not hypotheses:
        raise ValueError("empty corpus")
    matched = [0.0] * (max_n + 1)
    total = [0] * (max_n + 1)
    ref_len = 0
    hyp_len = 0
    for ref, hyp in zip(references, hypotheses):
        ref_len += len(ref)
        hyp_len += len(hyp)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp, n)
            ref_counts = _ngrams(ref, n)
            total[n] += sum(hyp_counts.values())
            matched[n] += sum(
                min(c, ref_counts[g]) for g, c in hyp_counts.items()
            )
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len) if hyp_len else 0.0
    precisions = []
    for n in range(1, max_n + 1):
        m = matched[n]
        if m == 0 and smooth_eps is not None and total[n] > 0:
            m = smooth_eps
        precisions.append(m / total[n] if total[n] else 0.0)
    scores: dict[int, float] = {}
    for k in range(1, max_n + 1):
        ps = precisions[:k]
        if any(p == 0.0 for p in ps):
            scores[k] = 0.0
        else:
            scores[k] = bp * math.exp(sum(math.log(p) for p in ps) / k)
    return scores


def _pair_rouge_n(ref: TokenSeq, hyp: TokenSeq, n: int) -> float:
    ref_counts = _ngrams(ref, n)
    hyp_counts = _ngrams(hyp, n)
    overlap = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    return _f1(overlap, sum(hyp_counts.values()), sum(ref_counts.values()))


def _f1(overlap: int, hyp_total: int, ref_total: int) -> float:
    p = overlap / hyp_total if hyp_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def _lcs_len(a: TokenSeq, b: TokenSeq) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge(
    references: Sequence[TokenSeq], hypotheses: Sequence[TokenSeq]
) -> tuple[float, float, float]:
    """(ROUGE-1, ROUGE-2, ROUGE-L): per-pair F1, averaged over the corpus.

    ROUGE-L uses the longest common subsequence with an evenly weighted
    F-measure.
    """
    if len(references) != len(hypotheses):
        raise ValueError("references and hypotheses must have equal length")
    if not hypotheses:
        raise ValueError("empty corpus")
    r1 = r2 = rl = 0.0
    for ref, hyp in zip(references, hypotheses):
        r1 += _pair_rouge_n(ref, hyp, 1)
        r2 += _pair_rouge_n(ref, hyp, 2)
        rl += _f1(_lcs_len(ref, hyp), len(hyp), len(ref))
    n = len(hypotheses)
    return r1 / n, r2 / n, rl / n


def _normalized(seq: TokenSeq | str) -> tuple[str, ...]:
    if isinstance(seq, str):
        return tuple(seq.split())
    return tuple(" ".join(seq).split())


def exact_match(
    references: Sequence[TokenSeq | str], hypotheses: Sequence[TokenSeq | str]
) -> float:
    """Fraction of pairs identical after whitespace normalization."""
    if len(references) != len(hypotheses):
        raise ValueError("references and hypotheses must have equal length")
    if not hypotheses:
        return 0.0
    hits = sum(
        _normalized(r) == _normalized(h) for r, h in zip(references, hypotheses)
    )
    return hits / len(hypotheses)


def distinct_n(hypotheses: Sequence[TokenSeq], n: int) -> float:
    """Unique n-grams across all hypotheses divided by the total n-gram
    count; 0 when no n-grams exist."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seen: set[tuple] = set()
    total = 0
    for hyp in hypotheses:
        grams = _ngrams(hyp, n)
        total += sum(grams.values())
        seen.update(grams.keys())
    return len(seen) / total if total else 0.0


@dataclass(frozen=True)
class GenEvalReport:
    """Generation metrics, all fractions in [0, 1]."""

    bleu: dict[int, float]
    rouge1: float
    rouge2: float
    rougeL: float
    exact_match: float
    distinct: dict[int, float]

    def to_dict(self, percent: bool = False) -> dict:
        scale = 100.0 if percent else 1.0
        return {
            "bleu": {n: v * scale for n, v in self.bleu.items()},
            "rouge1": self.rouge1 * scale,
            "rouge2": self.rouge2 * scale,
            "rougeL": self.rougeL * scale,
            "exact_match": self.exact_match * scale,
            "distinct": {n: v * scale for n, v in self.distinct.items()},
        }


def generation_report(
    references: Sequence[TokenSeq],
    hypotheses: Sequence[TokenSeq],
    max_bleu_n: int = 4,
    distinct_ns: Sequence[int] = (1, 2),
    smooth_eps: float | None = None,
) -> GenEvalReport:
    r1, r2, rl = rouge(references, hypotheses)
    return GenEvalReport(
        bleu=bleu(references, hypotheses, max_bleu_n, smooth_eps),
        rouge1=r1,
        rouge2=r2,
        rougeL=rl,
        exact_match=exact_match(references, hypotheses),
        distinct={n: distinct_n(hypotheses, n) for n in distinct_ns},
    )

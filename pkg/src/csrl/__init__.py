"""Conversational semantic role labeling toolkit.

Models predicate-argument structure across entire multi-turn dialogues:
data model and flattening, BIO tag codec, a trainable cross-turn tagger
with an sklearn-style estimator API, intra/cross-aware evaluation, and
predicate-argument linearization with structured attention masks for
downstream rewriting and response generation.
"""

from .dialogue import (
    DEFAULT_MARKERS,
    ROLES,
    CsrlError,
    DatasetStats,
    DialogueSession,
    FlatDialogue,
    Frame,
    Span,
    Utterance,
    Violation,
    ViolationKind,
    classify_argument,
    compute_stats,
    flat_index,
    flatten,
    span_of,
    turn_distance,
    validate_session,
)
from .tags import (
    decode_tags,
    encode_frame,
    encode_mentions,
    label_vocabulary,
)
from .metrics import (
    ArgTuple,
    EvalReport,
    GenEvalReport,
    bleu,
    distinct_n,
    exact_match,
    f1_report,
    frames_to_tuples,
    generation_report,
    gold_tuples,
    rouge,
)
from .config import ModelConfig, TrainingConfig
from .estimator import CsrlTagger
from .linearize import (
    PATriple,
    LinearizedInput,
    build_mask,
    extract_triples,
    linearize,
)
from .rewriter import RewriteExample, RewriteGenerator

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MARKERS",
    "ROLES",
    "CsrlError",
    "DatasetStats",
    "DialogueSession",
    "FlatDialogue",
    "Frame",
    "Span",
    "Utterance",
    "Violation",
    "ViolationKind",
    "classify_argument",
    "compute_stats",
    "flat_index",
    "flatten",
    "span_of",
    "turn_distance",
    "validate_session",
    "decode_tags",
    "encode_frame",
    "encode_mentions",
    "label_vocabulary",
    "ArgTuple",
    "EvalReport",
    "GenEvalReport",
    "bleu",
    "distinct_n",
    "exact_match",
    "f1_report",
    "frames_to_tuples",
    "generation_report",
    "gold_tuples",
    "rouge",
    "ModelConfig",
    "TrainingConfig",
    "CsrlTagger",
    "PATriple",
    "LinearizedInput",
    "build_mask",
    "extract_triples",
    "linearize",
    "RewriteExample",
    "RewriteGenerator",
    "__version__",
]

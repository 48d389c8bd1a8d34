"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

from typing import Sequence

from .dialogue import DialogueSession, validate_session


def check_sessions(
    sessions: Sequence[DialogueSession],
    require_frames: bool = False,
    max_reported: int = 5,
) -> list[DialogueSession]:
    """Verify a corpus before using it: right types, unique session ids,
    and no annotation-criterion violations. Returns the corpus as a list
    or raises ``ValueError`` describing what is wrong."""
    sessions = list(sessions)
    if not sessions:
        raise ValueError("expected at least one session")
    for s in sessions:
        if not isinstance(s, DialogueSession):
            raise TypeError(f"expected DialogueSession, got {type(s).__name__}")
    ids = [s.session_id for s in sessions]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate session ids: {dupes[:max_reported]}")
    violations = [v for s in sessions for v in validate_session(s)]
    if violations:
        shown = "; ".join(
            f"{v.session_id}[{v.frame_index}] {v.kind.value}: {v.detail}"
            for v in violations[:max_reported]
        )
        raise ValueError(
            f"{len(violations)} annotation violation(s), e.g. {shown}"
        )
    if require_frames and not any(s.frames for s in sessions):
        raise ValueError("corpus contains no predicate-argument frames")
    return sessions

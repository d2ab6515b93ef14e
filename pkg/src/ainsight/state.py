"""Session-state domain types: transcript, extracted state, insights, snapshots.

The merge semantics here are what keep an evolving conversation coherent:
extraction deltas land on top of the current state (problem replaces, info
upserts in arrival order, solutions append with case-insensitive dedup) and
the version only moves when something actually changed, which is what gates
insight generation downstream.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

SPEAKERS = ("doctor", "patient", "unknown")


@dataclass(frozen=True)
class TranscriptSegment:
    """One utterance in a session's cumulative transcript."""

    seq: int
    speaker: str
    text: str
    offset_ms: int
    error: bool = False  # transcription failed; text is empty
    transcribe_ms: float = 0.0  # latency at append time, reported per tick

    def to_dict(self) -> dict:
        payload = {
            "seq": self.seq,
            "speaker": self.speaker,
            "text": self.text,
            "offset_ms": self.offset_ms,
        }
        if self.error:
            payload["error"] = True
        return payload


@dataclass(frozen=True)
class ExtractedState:
    """Problem / contextual info / proposed solutions, with a change counter."""

    problem: str | None = None
    info: tuple[tuple[str, str], ...] = ()
    solutions: tuple[str, ...] = ()
    version: int = 0

    def info_dict(self) -> dict[str, str]:
        return dict(self.info)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "info": dict(self.info),
            "solutions": list(self.solutions),
            "version": self.version,
        }


@dataclass(frozen=True)
class ExtractionDelta:
    """Partial update parsed out of one extraction response."""

    problem: str | None = None
    info: tuple[tuple[str, str], ...] = ()
    solutions: tuple[str, ...] = ()


def merge_extracted(state: ExtractedState, delta: ExtractionDelta) -> ExtractedState:
    """Apply a delta; the version bumps iff anything changed (so merging is idempotent)."""
    changed = False

    problem = state.problem
    if delta.problem is not None and delta.problem.strip():
        new_problem = delta.problem.strip()
        if new_problem != problem:
            problem = new_problem
            changed = True

    info = list(state.info)
    keys = {k: i for i, (k, _) in enumerate(info)}
    for key, value in delta.info:
        if key in keys:
            if info[keys[key]][1] != value:
                info[keys[key]] = (key, value)
                changed = True
        else:
            keys[key] = len(info)
            info.append((key, value))
            changed = True

    solutions = list(state.solutions)
    seen = {s.strip().casefold() for s in solutions}
    for solution in delta.solutions:
        trimmed = solution.strip()
        if not trimmed or trimmed.casefold() in seen:
            continue
        seen.add(trimmed.casefold())
        solutions.append(trimmed)
        changed = True

    if not changed:
        return state
    return ExtractedState(
        problem=problem,
        info=tuple(info),
        solutions=tuple(solutions),
        version=state.version + 1,
    )


def parse_extraction_response(raw: str) -> ExtractionDelta | None:
    """Parse the extraction model's output into a delta, or None if hopeless.

    Accepts a JSON object with optional ``problem`` (string), ``info``
    (string-to-string object) and ``solutions`` (string array); unknown or
    mistyped fields are ignored. One repair pass strips any non-JSON
    prologue/epilogue (chatty model framing) before giving up.
    """
    obj = _load_json_object(raw)
    if obj is None:
        return None

    problem = obj.get("problem")
    if problem is not None and not isinstance(problem, str):
        logger.debug("ignoring non-string problem field: %r", problem)
        problem = None

    info: list[tuple[str, str]] = []
    raw_info = obj.get("info")
    if isinstance(raw_info, dict):
        for key, value in raw_info.items():
            if isinstance(key, str) and isinstance(value, str):
                info.append((key, value))
            else:
                logger.debug("ignoring non-string info entry: %r=%r", key, value)

    solutions: list[str] = []
    raw_solutions = obj.get("solutions")
    if isinstance(raw_solutions, list):
        solutions = [s for s in raw_solutions if isinstance(s, str)]

    return ExtractionDelta(problem=problem, info=tuple(info), solutions=tuple(solutions))


def _load_json_object(raw: str) -> dict | None:
    for candidate in (raw, _strip_to_braces(raw)):
        if candidate is None:
            continue
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def _strip_to_braces(raw: str) -> str | None:
    start = raw.find("{")
    end = raw.rfind("}")
    if start == -1 or end <= start:
        return None
    return raw[start : end + 1]


def compose_retrieval_query(state: ExtractedState) -> str:
    """Deterministic retrieval query: problem, info pairs, then solutions."""
    from .errors import InvalidStateError

    if state.version < 1:
        raise InvalidStateError("retrieval query requires a non-empty extracted state")
    parts: list[str] = []
    if state.problem:
        parts.append(state.problem)
    parts.extend(f"{key}: {value}" for key, value in state.info)
    parts.extend(state.solutions)
    return " ".join(parts)


@dataclass(frozen=True)
class Insight:
    """A generated statement with engine-attached chunk-level sources."""

    insight_id: str
    text: str
    sources: tuple[tuple[str, str], ...]  # (chunk_id, source_path), non-empty
    query_used: str
    created_tick: int
    rank: int

    def to_dict(self) -> dict:
        return {
            "insight_id": self.insight_id,
            "text": self.text,
            "sources": [
                {"chunk_id": cid, "source_path": path} for cid, path in self.sources
            ],
            "query_used": self.query_used,
            "created_tick": self.created_tick,
            "rank": self.rank,
        }


@dataclass(frozen=True)
class StageLatencies:
    transcribe_pending: float = 0.0
    extract: float = 0.0
    retrieve: float = 0.0
    generate: float = 0.0

    def to_dict(self) -> dict:
        return {
            "transcribe_pending": self.transcribe_pending,
            "extract": self.extract,
            "retrieve": self.retrieve,
            "generate": self.generate,
        }


@dataclass(frozen=True)
class TickReport:
    """What one pipeline invocation did (or why it did nothing)."""

    tick_index: int
    new_segments_consumed: int
    extraction_changed: bool = False
    insights_generated: int = 0
    stage_latencies_ms: StageLatencies = field(default_factory=StageLatencies)
    skipped: bool = False
    skip_reason: str | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "tick_index": self.tick_index,
            "new_segments_consumed": self.new_segments_consumed,
            "extraction_changed": self.extraction_changed,
            "insights_generated": self.insights_generated,
            "stage_latencies_ms": self.stage_latencies_ms.to_dict(),
            "skipped": self.skipped,
            "skip_reason": self.skip_reason,
            "error": self.error,
        }


@dataclass(frozen=True)
class Snapshot:
    """Immutable copy of everything a client may render."""

    session_id: str
    snapshot_version: int
    transcript: tuple[TranscriptSegment, ...]
    extracted: ExtractedState
    insights: tuple[Insight, ...]  # newest first
    finished: bool
    tick_count: int

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "snapshot_version": self.snapshot_version,
            "transcript": [s.to_dict() for s in self.transcript],
            "extracted": self.extracted.to_dict(),
            "insights": [i.to_dict() for i in self.insights],
            "finished": self.finished,
            "tick_count": self.tick_count,
        }

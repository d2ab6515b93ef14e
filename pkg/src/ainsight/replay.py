"""Scripted conversation replay with simulated or wall-clock pacing.

A dialogue script is a titled list of (speaker, text, at_ms) turns. Replay
creates one session named ``replay-<title>``, appends each turn at its
script time and runs every tick that falls due, with segments winning
ties at equal timestamps. Simulated mode jumps a fake clock between
events and is bit-for-bit deterministic; wall mode sleeps for real
(divided by ``speed``) so latency numbers mean something.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

from .clock import SimulatedClock
from .config import bundled_fixtures_dir
from .engine import Engine
from .errors import InvalidInputError, InvalidStateError
from .providers import UsageReport
from .state import SPEAKERS, Snapshot, TickReport

__all__ = [
    "DialogueScript",
    "DialogueTurn",
    "ReplayMetrics",
    "bundled_fixtures_dir",
    "export_metrics",
    "load_script",
    "run_replay",
]


@dataclass(frozen=True)
class DialogueTurn:
    speaker: str
    text: str
    at_ms: int


@dataclass(frozen=True)
class DialogueScript:
    title: str
    turns: tuple[DialogueTurn, ...]

    @property
    def span_ms(self) -> int:
        return self.turns[-1].at_ms


def load_script(path: Path | str) -> DialogueScript:
    """Parse and validate a script file. Timestamps must be non-decreasing."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read script {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidInputError("script must be a JSON object")
    title = data.get("title")
    if not isinstance(title, str) or not title.strip():
        raise InvalidInputError("script title must be a non-empty string")
    raw_turns = data.get("turns")
    if not isinstance(raw_turns, list) or not raw_turns:
        raise InvalidInputError("script turns must be a non-empty list")
    turns: list[DialogueTurn] = []
    last_at = -1
    for i, raw in enumerate(raw_turns):
        if not isinstance(raw, dict):
            raise InvalidInputError(f"turn {i} must be an object")
        speaker = raw.get("speaker")
        text = raw.get("text")
        at_ms = raw.get("at_ms")
        if speaker not in SPEAKERS:
            raise InvalidInputError(f"turn {i}: speaker must be one of {SPEAKERS}")
        if not isinstance(text, str) or not text.strip():
            raise InvalidInputError(f"turn {i}: text must be a non-empty string")
        if not isinstance(at_ms, int) or isinstance(at_ms, bool) or at_ms < 0:
            raise InvalidInputError(f"turn {i}: at_ms must be a non-negative integer")
        if at_ms < last_at:
            raise InvalidInputError(f"turn {i}: at_ms decreases ({at_ms} < {last_at})")
        last_at = at_ms
        turns.append(DialogueTurn(speaker=speaker, text=text.strip(), at_ms=at_ms))
    return DialogueScript(title=title.strip(), turns=tuple(turns))


@dataclass(frozen=True)
class ReplayMetrics:
    session_id: str
    script_title: str
    mode: str
    tick_ms: int
    span_ms: int
    tick_count: int
    segments_appended: int
    insights_total: int
    wall_time_ms: float
    usage: UsageReport
    ticks: tuple[TickReport, ...]
    final_snapshot: Snapshot

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "script_title": self.script_title,
            "mode": self.mode,
            "tick_ms": self.tick_ms,
            "span_ms": self.span_ms,
            "tick_count": self.tick_count,
            "segments_appended": self.segments_appended,
            "insights_total": self.insights_total,
            "wall_time_ms": self.wall_time_ms,
            "usage": self.usage.to_dict(),
            "ticks": [t.to_dict() for t in self.ticks],
            "final_snapshot": self.final_snapshot.to_dict(),
        }


def export_metrics(metrics: ReplayMetrics, path: Path | str) -> None:
    Path(path).write_text(
        json.dumps(metrics.to_dict(), indent=2) + "\n", encoding="utf-8"
    )


def run_replay(
    engine: Engine,
    script: DialogueScript,
    *,
    mode: str = "simulated",
    speed: float = 1.0,
) -> ReplayMetrics:
    """Drive one scripted session to completion and collect metrics.

    In simulated mode the engine must have been built with a
    :class:`SimulatedClock`; replay advances it itself.
    """
    if mode not in ("simulated", "wall"):
        raise InvalidInputError(f"mode must be 'simulated' or 'wall', got {mode!r}")
    if speed <= 0:
        raise InvalidInputError("speed must be positive")
    clock = engine.clock
    if mode == "simulated" and not isinstance(clock, SimulatedClock):
        raise InvalidStateError("simulated replay requires an engine on a SimulatedClock")

    usage_before = engine.usage
    wall_started = time.monotonic()
    session = engine.create_session(
        session_id=f"replay-{script.title}", fixture_tag=script.title
    )
    start = session.started_at_ms

    def wait_until(script_ms: int) -> None:
        if mode == "simulated":
            clock.set(start + script_ms)
        else:
            deadline = wall_started + script_ms / 1000.0 / speed
            delay = deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)

    for turn in script.turns:
        while session.next_tick_due - start < turn.at_ms:
            due = session.next_tick_due
            wait_until(due - start)
            session.pump(due)
        wait_until(turn.at_ms)
        session.append_segment(turn.speaker, turn.text, turn.at_ms)
    end_ms = script.span_ms
    while session.next_tick_due - start <= end_ms:
        due = session.next_tick_due
        wait_until(due - start)
        session.pump(due)

    final = session.finish()
    if mode == "simulated":
        wall_time_ms = float(clock.now_ms() - start)
    else:
        wall_time_ms = (time.monotonic() - wall_started) * 1000.0
    return ReplayMetrics(
        session_id=session.session_id,
        script_title=script.title,
        mode=mode,
        tick_ms=engine.config.tick_ms,
        span_ms=script.span_ms,
        tick_count=final.tick_count,
        segments_appended=len(final.transcript),
        insights_total=len(final.insights),
        wall_time_ms=wall_time_ms,
        usage=engine.usage - usage_before,
        ticks=tuple(session.tick_reports),
        final_snapshot=final,
    )

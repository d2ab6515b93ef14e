"""Per-session orchestration: transcript accumulation, tick-driven
extraction, retrieval-query composition and grounded insight generation.

A session is one conversation. Segments append immediately (the transcript
is visible before the next tick); every ``tick_ms`` the pipeline consumes
whatever arrived, re-extracts state from the full cumulative transcript,
and, only when the extraction actually changed, retrieves the top-k
chunks and asks for insights. Ticks are transactional: a provider failure
mid-tick leaves every piece of session state untouched except the tick
counter, and the failed segments are consumed by a later tick instead.

Grounding is structural, not advisory: an insight may only cite chunk ids
the engine itself retrieved this tick, and source paths are attached from
the engine's own hit records, never taken from model output.
"""

from __future__ import annotations

import json
import logging
import threading
from importlib import resources
from pathlib import Path
from string import Template

from .clock import Clock
from .config import EngineConfig
from .errors import (
    EvaluationError,
    InvalidInputError,
    ProviderError,
    QueryParseError,
    SessionFinishedError,
)
from .providers import HIT_MARKER, ProviderSet
from .state import (
    SPEAKERS,
    ExtractedState,
    Insight,
    Snapshot,
    StageLatencies,
    TickReport,
    TranscriptSegment,
    compose_retrieval_query,
    merge_extracted,
    parse_extraction_response,
)
from .tablequery import TableRegistry, evaluate, format_result, parse_query, render_query
from .vindex import SearchHit, VectorIndex

logger = logging.getLogger(__name__)

MAX_TOOL_ROUNDS = 3


class PromptLibrary:
    """Loads prompt templates from a directory (default: the packaged ``prompts/``)."""

    def __init__(self, prompts_dir: Path | None = None):
        self._dir = Path(prompts_dir) if prompts_dir else None
        self._cache: dict[str, Template] = {}

    def get(self, name: str) -> Template:
        if name not in self._cache:
            if self._dir is not None:
                text = (self._dir / f"{name}.txt").read_text(encoding="utf-8")
            else:
                text = (
                    resources.files("ainsight")
                    .joinpath("prompts")
                    .joinpath(f"{name}.txt")
                    .read_text(encoding="utf-8")
                )
            self._cache[name] = Template(text)
        return self._cache[name]


class SnapshotFeed:
    """One subscriber's snapshot slot. Publishing coalesces (latest wins),
    so slow consumers may skip versions but never see them out of order,
    and publishing never blocks the pipeline."""

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._pending: Snapshot | None = None
        self._closed = False

    def publish(self, snapshot: Snapshot) -> None:
        with self._cond:
            if not self._closed:
                self._pending = snapshot
                self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        return self._closed

    def get(self, timeout: float) -> Snapshot | None:
        """Wait up to *timeout* seconds for the next snapshot; None on timeout."""
        with self._cond:
            if self._pending is None and not self._closed:
                self._cond.wait(timeout)
            snapshot, self._pending = self._pending, None
            return snapshot


class Session:
    """One conversation's serial executor.

    All mutations run under one reentrant lock, so segment appends and
    ticks never interleave mid-operation; snapshots handed out are
    immutable copies.
    """

    def __init__(
        self,
        session_id: str,
        *,
        index: VectorIndex,
        registry: TableRegistry,
        providers: ProviderSet,
        prompts: PromptLibrary,
        config: EngineConfig,
        clock: Clock,
        fixture_tag: str | None = None,
    ):
        self.session_id = session_id
        self._index = index
        self._registry = registry
        self._providers = providers
        self._prompts = prompts
        self._config = config
        self._clock = clock
        self._fixture_tag = fixture_tag or "session"
        self._lock = threading.RLock()
        self.started_at_ms = clock.now_ms()
        self._segments: list[TranscriptSegment] = []
        self._extracted = ExtractedState()
        self._insights: list[Insight] = []
        self._last_consumed_seq = -1
        self._tick_count = 0
        self._finished = False
        self._snapshot_version = 0
        self._next_tick_due = self.started_at_ms + config.tick_ms
        self._tick_reports: list[TickReport] = []
        self._final_snapshot: Snapshot | None = None
        self._feeds: list[SnapshotFeed] = []

    # -- public surface ------------------------------------------------------

    @property
    def finished(self) -> bool:
        return self._finished

    @property
    def tick_count(self) -> int:
        return self._tick_count

    @property
    def next_tick_due(self) -> int:
        return self._next_tick_due

    @property
    def tick_reports(self) -> list[TickReport]:
        with self._lock:
            return list(self._tick_reports)

    def snapshot(self) -> Snapshot:
        with self._lock:
            return self._snapshot_locked()

    def subscribe(self) -> SnapshotFeed:
        """New feed, primed with the current snapshot."""
        with self._lock:
            feed = SnapshotFeed()
            self._feeds.append(feed)
            feed.publish(self._snapshot_locked())
            return feed

    def unsubscribe(self, feed: SnapshotFeed) -> None:
        with self._lock:
            if feed in self._feeds:
                self._feeds.remove(feed)
        feed.close()

    def append_segment(
        self, speaker: str, payload: str | bytes, offset_ms: int
    ) -> int:
        """Append an utterance; audio payloads are transcribed here, so the
        transcript is visible immediately rather than at the next tick."""
        if speaker not in SPEAKERS:
            raise InvalidInputError(f"speaker must be one of {SPEAKERS}, got {speaker!r}")
        with self._lock:
            if self._finished:
                raise SessionFinishedError(f"session {self.session_id} is finished")
            if offset_ms < 0 or (
                self._segments and offset_ms < self._segments[-1].offset_ms
            ):
                raise InvalidInputError(
                    f"offset_ms must be non-decreasing, got {offset_ms}"
                )
            error = False
            transcribe_ms = 0.0
            if isinstance(payload, bytes):
                t0 = self._clock.now_ms()
                try:
                    text = self._providers.transcription.transcribe(payload)
                except ProviderError as exc:
                    logger.warning(
                        "transcription failed in session %s: %s", self.session_id, exc
                    )
                    text = ""
                    error = True
                transcribe_ms = float(self._clock.now_ms() - t0)
            else:
                text = payload
            seq = len(self._segments)
            self._segments.append(
                TranscriptSegment(
                    seq=seq,
                    speaker=speaker,
                    text=text,
                    offset_ms=offset_ms,
                    error=error,
                    transcribe_ms=transcribe_ms,
                )
            )
            self._bump_and_publish()
            return seq

    def pump(self, now_ms: int) -> list[TickReport]:
        """Run every tick that has come due by *now_ms* (the scheduler entry
        point; catch-up after a clock jump runs each missed tick in order)."""
        reports = []
        with self._lock:
            while not self._finished and self._next_tick_due <= now_ms:
                self._next_tick_due += self._config.tick_ms
                reports.append(self._run_tick_locked())
        return reports

    def run_tick(self, now_ms: int | None = None) -> TickReport:
        """Run a single tick immediately (callers own the cadence)."""
        with self._lock:
            if self._finished:
                raise SessionFinishedError(f"session {self.session_id} is finished")
            now = self._clock.now_ms() if now_ms is None else now_ms
            self._next_tick_due = now + self._config.tick_ms
            return self._run_tick_locked()

    def finish(self) -> Snapshot:
        """Freeze the session; idempotent, always returns the same snapshot."""
        with self._lock:
            if self._final_snapshot is not None:
                return self._final_snapshot
            self._finished = True
            self._bump_and_publish()
            self._final_snapshot = self._snapshot_locked()
            return self._final_snapshot

    # -- internals -----------------------------------------------------------

    def _snapshot_locked(self) -> Snapshot:
        return Snapshot(
            session_id=self.session_id,
            snapshot_version=self._snapshot_version,
            transcript=tuple(self._segments),
            extracted=self._extracted,
            insights=tuple(self._insights),
            finished=self._finished,
            tick_count=self._tick_count,
        )

    def _bump_and_publish(self) -> None:
        self._snapshot_version += 1
        snapshot = self._snapshot_locked()
        for feed in self._feeds:
            feed.publish(snapshot)

    def _run_tick_locked(self) -> TickReport:
        tick_index = self._tick_count
        self._tick_count += 1
        new_segments = [s for s in self._segments if s.seq > self._last_consumed_seq]
        if not new_segments:
            report = TickReport(
                tick_index=tick_index,
                new_segments_consumed=0,
                skipped=True,
                skip_reason="no new segments",
            )
        else:
            report = self._execute_tick(tick_index, new_segments)
        self._tick_reports.append(report)
        self._bump_and_publish()  # tick_count is externally visible
        return report

    def _execute_tick(
        self, tick_index: int, new_segments: list[TranscriptSegment]
    ) -> TickReport:
        now = self._clock.now_ms
        consumed = len(new_segments)
        transcribe_pending = sum(s.transcribe_ms for s in new_segments)
        fixture_key = f"{self._fixture_tag}-t{len(self._segments)}"

        def abort(message: str, *, changed: bool = False, **latency) -> TickReport:
            return TickReport(
                tick_index=tick_index,
                new_segments_consumed=consumed,
                extraction_changed=changed,
                stage_latencies_ms=StageLatencies(
                    transcribe_pending=transcribe_pending, **latency
                ),
                error=message,
            )

        transcript_text = "\n".join(f"{s.speaker}: {s.text}" for s in self._segments)
        prompt = self._prompts.get("extract").safe_substitute(
            fixture_key=fixture_key, transcript=transcript_text
        )
        t0 = now()
        try:
            raw = self._providers.chat.complete(prompt, "json_object")
        except ProviderError as exc:
            return abort(f"extraction provider failure: {exc}", extract=float(now() - t0))
        extract_ms = float(now() - t0)
        delta = parse_extraction_response(raw)
        if delta is None:
            return abort("extraction parse failure", extract=extract_ms)

        merged = merge_extracted(self._extracted, delta)
        changed = merged.version != self._extracted.version

        retrieve_ms = 0.0
        generate_ms = 0.0
        new_insights: list[Insight] = []
        if changed:
            query = compose_retrieval_query(merged)
            t1 = now()
            try:
                vector = self._providers.embedding.embed([query])[0]
            except ProviderError as exc:
                return abort(
                    f"retrieval provider failure: {exc}",
                    changed=True,
                    extract=extract_ms,
                    retrieve=float(now() - t1),
                )
            hits = self._index.search(vector, self._config.top_k)
            retrieve_ms = float(now() - t1)
            if hits:
                t2 = now()
                try:
                    new_insights = self._generate_insights(
                        merged, hits, query, tick_index, fixture_key
                    )
                except ProviderError as exc:
                    return abort(
                        f"insight provider failure: {exc}",
                        changed=True,
                        extract=extract_ms,
                        retrieve=retrieve_ms,
                        generate=float(now() - t2),
                    )
                generate_ms = float(now() - t2)

        # success: commit atomically
        self._extracted = merged
        self._last_consumed_seq = self._segments[-1].seq
        if new_insights:
            self._insights = new_insights + self._insights
        return TickReport(
            tick_index=tick_index,
            new_segments_consumed=consumed,
            extraction_changed=changed,
            insights_generated=len(new_insights),
            stage_latencies_ms=StageLatencies(
                transcribe_pending=transcribe_pending,
                extract=extract_ms,
                retrieve=retrieve_ms,
                generate=generate_ms,
            ),
        )

    def _state_text(self, state: ExtractedState) -> str:
        lines = [f"problem: {state.problem or '(none)'}"]
        lines.extend(f"{key}: {value}" for key, value in state.info)
        if state.solutions:
            lines.append("solutions: " + "; ".join(state.solutions))
        return "\n".join(lines)

    def _run_tool_loop(
        self, state: ExtractedState, table_hits: list[SearchHit], fixture_key: str
    ) -> list[str]:
        """Bounded query-tool exchange over retrieved table descriptors.

        Each round the model emits one query (or NONE); parse/evaluate
        failures are fed back exactly once, a second failure ends the loop.
        """
        results: list[str] = []
        state_text = self._state_text(state)
        tables_text = "\n".join(h.text for h in table_hits)
        feedback = ""
        error_fed_back = False
        for round_no in range(1, MAX_TOOL_ROUNDS + 1):
            prompt = self._prompts.get("tool").safe_substitute(
                fixture_key=f"{fixture_key}-r{round_no}",
                state=state_text,
                tables=tables_text,
                feedback=(
                    f"\nYour previous query failed: {feedback}\nTry once more or reply NONE."
                    if feedback
                    else ""
                ),
            )
            response = self._providers.chat.complete(prompt, "free_text").strip()
            feedback = ""
            if not response or response.upper() == "NONE":
                break
            try:
                query = parse_query(response)
            except QueryParseError as exc:
                if error_fed_back:
                    break
                feedback = str(exc)
                error_fed_back = True
                continue
            table = self._registry.get(query.table_id)
            if table is None:
                if error_fed_back:
                    break
                feedback = f"unknown table {query.table_id!r}"
                error_fed_back = True
                continue
            try:
                result = evaluate(query, table)
            except EvaluationError as exc:
                if error_fed_back:
                    break
                feedback = str(exc)
                error_fed_back = True
                continue
            results.append(f"{render_query(query)} -> {format_result(result)}")
        return results

    def _generate_insights(
        self,
        state: ExtractedState,
        hits: list[SearchHit],
        query: str,
        tick_index: int,
        fixture_key: str,
    ) -> list[Insight]:
        table_hits = [h for h in hits if h.kind == "table_descriptor"]
        tool_results: list[str] = []
        if table_hits and len(self._registry) > 0:
            tool_results = self._run_tool_loop(state, table_hits, fixture_key)

        hit_blocks = [
            f"{HIT_MARKER}{h.chunk_id}\n[{h.chunk_id}] source: {h.source_path}\n{h.text}"
            for h in hits
        ]
        prompt = self._prompts.get("insight").safe_substitute(
            fixture_key=fixture_key,
            max_insights=self._config.max_insights_per_tick,
            state=self._state_text(state),
            hits="\n\n".join(hit_blocks),
            tool_results=(
                "\nTable query results:\n" + "\n".join(tool_results)
                if tool_results
                else ""
            ),
        )
        raw = self._providers.chat.complete(prompt, "json_object")
        candidates = parse_insight_response(raw)

        hit_by_id = {h.chunk_id: h for h in hits}
        existing = {i.text.strip().casefold() for i in self._insights}
        accepted: list[tuple[str, tuple[tuple[str, str], ...]]] = []
        for text, source_ids in candidates:
            text = text.strip()
            if not text or not source_ids:
                continue
            if any(sid not in hit_by_id for sid in source_ids):
                logger.info("dropping insight citing chunks outside the hit set: %r", text)
                continue
            if text.casefold() in existing:
                continue
            ordered_ids = list(dict.fromkeys(source_ids))
            # paths come from our own hit records, never from model output
            sources = tuple((sid, hit_by_id[sid].source_path) for sid in ordered_ids)
            existing.add(text.casefold())
            accepted.append((text, sources))
            if len(accepted) >= self._config.max_insights_per_tick:
                break

        return [
            Insight(
                insight_id=f"ins-t{tick_index:03d}-r{rank}",
                text=text,
                sources=sources,
                query_used=query,
                created_tick=tick_index,
                rank=rank,
            )
            for rank, (text, sources) in enumerate(accepted, start=1)
        ]


def parse_insight_response(raw: str) -> list[tuple[str, list[str]]]:
    """Parse the insight model's output: a JSON array of {text, source_ids}.

    Malformed items are dropped individually; an unparseable body yields an
    empty list (zero insights is not an error).
    """
    data = None
    for candidate in (raw, _strip_to_brackets(raw)):
        if candidate is None:
            continue
        try:
            data = json.loads(candidate)
            break
        except json.JSONDecodeError:
            continue
    if not isinstance(data, list):
        return []
    parsed: list[tuple[str, list[str]]] = []
    for item in data:
        if not isinstance(item, dict):
            continue
        text = item.get("text")
        source_ids = item.get("source_ids")
        if not isinstance(text, str) or not isinstance(source_ids, list):
            continue
        ids = [s for s in source_ids if isinstance(s, str)]
        parsed.append((text, ids))
    return parsed


def _strip_to_brackets(raw: str) -> str | None:
    start = raw.find("[")
    end = raw.rfind("]")
    if start == -1 or end <= start:
        return None
    return raw[start : end + 1]

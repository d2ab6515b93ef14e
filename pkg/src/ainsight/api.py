"""HTTP surface: session lifecycle, segment ingress and SSE snapshots.

Events are whole snapshots, not diffs. Each SSE message is
``{"type": "snapshot", "payload": <snapshot>}``; the per-subscriber feed
coalesces, so a slow client skips intermediate versions but snapshot
versions on one stream are always strictly increasing. Comment lines
(``: keepalive``) go out when nothing has changed for a while so proxies
keep the connection open.
"""

from __future__ import annotations

import asyncio
import base64
import binascii
import json
import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .engine import Engine
from .errors import (
    EmptyKnowledgeBaseError,
    InvalidInputError,
    SessionFinishedError,
    UnknownSessionError,
)

logger = logging.getLogger(__name__)

KEEPALIVE_S = 15.0


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def create_app(engine: Engine | None = None) -> FastAPI:
    app = FastAPI(title="ainsight", docs_url=None, redoc_url=None)
    app.state.engine = engine

    def current_engine() -> Engine | None:
        return app.state.engine

    @app.get("/health")
    def health() -> JSONResponse:
        eng = current_engine()
        if eng is None:
            return JSONResponse({"status": "degraded", "reason": "engine not configured"})
        return JSONResponse(eng.health())

    @app.post("/sessions")
    async def create_session(request: Request) -> JSONResponse:
        eng = current_engine()
        if eng is None:
            return _error(503, "engine not configured")
        session_id = None
        body_bytes = await request.body()
        if body_bytes:
            try:
                body = json.loads(body_bytes)
            except json.JSONDecodeError:
                return _error(400, "request body must be JSON")
            if not isinstance(body, dict):
                return _error(400, "request body must be a JSON object")
            session_id = body.get("session_id")
            if session_id is not None and not isinstance(session_id, str):
                return _error(400, "session_id must be a string")
        try:
            session = eng.create_session(session_id)
        except EmptyKnowledgeBaseError as exc:
            return _error(503, str(exc))
        except InvalidInputError as exc:
            return _error(409, str(exc))
        return JSONResponse(
            {
                "session_id": session.session_id,
                "started_at_ms": session.started_at_ms,
                "tick_ms": eng.config.tick_ms,
            },
            status_code=201,
        )

    @app.post("/sessions/{session_id}/segments")
    async def append_segment(session_id: str, request: Request) -> JSONResponse:
        eng = current_engine()
        if eng is None:
            return _error(503, "engine not configured")
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(400, "request body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "request body must be a JSON object")

        speaker = body.get("speaker")
        text = body.get("text")
        audio_b64 = body.get("audio_b64")
        offset_ms = body.get("offset_ms")
        if not isinstance(speaker, str):
            return _error(400, "speaker must be a string")
        if (text is None) == (audio_b64 is None):
            return _error(400, "provide exactly one of text or audio_b64")
        if text is not None and not isinstance(text, str):
            return _error(400, "text must be a string")
        if audio_b64 is not None and not isinstance(audio_b64, str):
            return _error(400, "audio_b64 must be a string")
        if not isinstance(offset_ms, int) or isinstance(offset_ms, bool):
            return _error(400, "offset_ms must be an integer")

        if audio_b64 is not None:
            try:
                payload: str | bytes = base64.b64decode(audio_b64, validate=True)
            except binascii.Error:
                return _error(400, "audio_b64 is not valid base64")
        else:
            payload = text

        try:
            session = eng.get_session(session_id)
        except UnknownSessionError as exc:
            return _error(404, str(exc))
        try:
            seq = await asyncio.to_thread(session.append_segment, speaker, payload, offset_ms)
        except SessionFinishedError as exc:
            return _error(409, str(exc))
        except InvalidInputError as exc:
            return _error(400, str(exc))
        return JSONResponse({"seq": seq}, status_code=202)

    @app.get("/sessions/{session_id}/snapshot")
    def snapshot(session_id: str) -> JSONResponse:
        eng = current_engine()
        if eng is None:
            return _error(503, "engine not configured")
        try:
            session = eng.get_session(session_id)
        except UnknownSessionError as exc:
            return _error(404, str(exc))
        return JSONResponse(session.snapshot().to_dict())

    @app.post("/sessions/{session_id}/finish")
    async def finish(session_id: str) -> JSONResponse:
        eng = current_engine()
        if eng is None:
            return _error(503, "engine not configured")
        try:
            session = eng.get_session(session_id)
        except UnknownSessionError as exc:
            return _error(404, str(exc))
        final = await asyncio.to_thread(session.finish)
        return JSONResponse(final.to_dict())

    @app.get("/sessions/{session_id}/events")
    async def events(session_id: str, request: Request):
        eng = current_engine()
        if eng is None:
            return _error(503, "engine not configured")
        try:
            session = eng.get_session(session_id)
        except UnknownSessionError as exc:
            return _error(404, str(exc))
        feed = session.subscribe()

        async def stream():
            try:
                while True:
                    snap = await asyncio.to_thread(feed.get, KEEPALIVE_S)
                    if await request.is_disconnected():
                        break
                    if snap is None:
                        if feed.closed:
                            break
                        yield ": keepalive\n\n"
                        continue
                    event = {"type": "snapshot", "payload": snap.to_dict()}
                    yield f"data: {json.dumps(event, separators=(',', ':'))}\n\n"
            finally:
                session.unsubscribe(feed)

        return StreamingResponse(
            stream(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    return app

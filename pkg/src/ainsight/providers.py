"""Transcription, embedding and chat providers, with deterministic mocks.

Mock mode keeps the whole engine offline-testable:

* transcription echoes the payload back as UTF-8 text (replay scripts
  carry text, not audio);
* embeddings are hashed-bag-of-words vectors (dimension 256), identical
  text always giving the identical vector;
* chat completions come from fixture files selected by marker lines the
  pipeline embeds in every prompt (``#TASK:<task>`` and
  ``#FIXTURE:<key>``), never from prompt hashing, so prompt wording can
  evolve without breaking fixtures. A fixture file is a JSON document
  ``{"response": "<text>"}`` named ``<task>__<key>.json``. Unknown keys
  fall back to documented defaults: ``{}`` for extract, ``[]`` for
  insight, ``NONE`` for tool, ``{}`` otherwise. Insight fixtures may use
  ``{{hit1}}``..``{{hitN}}`` placeholders, filled from the prompt's
  ``#HIT:<chunk_id>`` lines.

Http mode speaks the OpenAI-compatible surface (``/v1/chat/completions``,
``/v1/embeddings``, ``/v1/audio/transcriptions``) with at most one
reattempt on transport failure.

Usage metering is shared: every provider call increments one
:class:`UsageMeter` atomically. Mock token counts are whitespace token
counts (metrics plumbing, never a claim about real tokenizers); mock
audio seconds are payload bytes / 1000.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
import threading
from dataclasses import dataclass
from pathlib import Path

import httpx

from .config import ProviderConfig, bundled_fixtures_dir
from .errors import InvalidInputError, ProviderError

logger = logging.getLogger(__name__)

MOCK_EMBED_DIM = 256
TASK_MARKER = "#TASK:"
FIXTURE_MARKER = "#FIXTURE:"
HIT_MARKER = "#HIT:"

DEFAULT_RESPONSES = {"extract": "{}", "insight": "[]", "tool": "NONE"}
FALLBACK_RESPONSE = "{}"


@dataclass(frozen=True)
class UsageReport:
    """Accumulated provider usage; totals only ever grow within a session."""

    prompt_tokens: int = 0
    completion_tokens: int = 0
    audio_seconds: float = 0.0
    call_count: int = 0

    def __sub__(self, other: "UsageReport") -> "UsageReport":
        return UsageReport(
            prompt_tokens=self.prompt_tokens - other.prompt_tokens,
            completion_tokens=self.completion_tokens - other.completion_tokens,
            audio_seconds=self.audio_seconds - other.audio_seconds,
            call_count=self.call_count - other.call_count,
        )

    def to_dict(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "audio_seconds": self.audio_seconds,
            "call_count": self.call_count,
        }


class UsageMeter:
    """Thread-safe accumulator behind :class:`UsageReport` snapshots."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._prompt_tokens = 0
        self._completion_tokens = 0
        self._audio_seconds = 0.0
        self._call_count = 0

    def add(
        self,
        prompt_tokens: int = 0,
        completion_tokens: int = 0,
        audio_seconds: float = 0.0,
    ) -> None:
        with self._lock:
            self._prompt_tokens += prompt_tokens
            self._completion_tokens += completion_tokens
            self._audio_seconds += audio_seconds
            self._call_count += 1

    def snapshot(self) -> UsageReport:
        with self._lock:
            return UsageReport(
                prompt_tokens=self._prompt_tokens,
                completion_tokens=self._completion_tokens,
                audio_seconds=self._audio_seconds,
                call_count=self._call_count,
            )


def _whitespace_tokens(text: str) -> int:
    return len(text.split())


# ---------------------------------------------------------------------------
# Mock providers


class MockTranscription:
    """Returns the payload decoded as UTF-8; replay scripts carry text."""

    def __init__(self, usage: UsageMeter):
        self._usage = usage

    def transcribe(self, audio: bytes) -> str:
        if not audio:
            raise InvalidInputError("empty audio payload")
        try:
            text = audio.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProviderError(f"mock transcription expects UTF-8 text payloads: {exc}") from exc
        self._usage.add(audio_seconds=len(audio) / 1000.0)
        return text


_TOKEN_SPLIT_RE = re.compile(r"[^a-z0-9]+")


def mock_embed_one(text: str) -> list[float]:
    """Hashed bag-of-words embedding: stable, unit-norm, dimension 256."""
    counts = [0.0] * MOCK_EMBED_DIM
    tokens = [t for t in _TOKEN_SPLIT_RE.split(text.lower()) if t]
    if not tokens:
        tokens = [""]  # degenerate text still gets a non-zero vector
    for token in tokens:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        counts[int.from_bytes(digest[:4], "big") % MOCK_EMBED_DIM] += 1.0
    norm = math.sqrt(sum(c * c for c in counts))
    return [c / norm for c in counts]


class MockEmbedding:
    dimension = MOCK_EMBED_DIM

    def __init__(self, usage: UsageMeter):
        self._usage = usage

    def embed(self, texts: list[str]) -> list[list[float]]:
        for i, text in enumerate(texts):
            if not text:
                raise InvalidInputError(f"empty text at index {i}")
        self._usage.add(prompt_tokens=sum(_whitespace_tokens(t) for t in texts))
        return [mock_embed_one(t) for t in texts]


def _prompt_markers(prompt: str) -> tuple[str | None, str | None, list[str]]:
    task = fixture = None
    hits: list[str] = []
    for line in prompt.splitlines():
        line = line.strip()
        if line.startswith(TASK_MARKER) and task is None:
            task = line[len(TASK_MARKER) :].strip()
        elif line.startswith(FIXTURE_MARKER) and fixture is None:
            fixture = line[len(FIXTURE_MARKER) :].strip()
        elif line.startswith(HIT_MARKER):
            hits.append(line[len(HIT_MARKER) :].strip())
    return task, fixture, hits


class MockChat:
    """Canned completions keyed by the prompt's task marker and fixture key."""

    def __init__(self, usage: UsageMeter, fixtures_dir: Path | None = None):
        self._usage = usage
        self._fixtures_dir = (
            Path(fixtures_dir) if fixtures_dir else bundled_fixtures_dir() / "mock"
        )

    def _lookup(self, task: str | None, fixture: str | None) -> str | None:
        if task is None or fixture is None:
            return None
        path = self._fixtures_dir / f"{task}__{fixture}.json"
        if not path.exists():
            return None
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
            return payload["response"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ProviderError(f"bad mock fixture {path}: {exc}") from exc

    def complete(self, prompt: str, response_format_hint: str = "free_text") -> str:
        if not prompt:
            raise InvalidInputError("empty prompt")
        task, fixture, hits = _prompt_markers(prompt)
        response = self._lookup(task, fixture)
        if response is None:
            response = DEFAULT_RESPONSES.get(task or "", FALLBACK_RESPONSE)
        for i, chunk_id in enumerate(hits, start=1):
            response = response.replace(f"{{{{hit{i}}}}}", chunk_id)
        self._usage.add(
            prompt_tokens=_whitespace_tokens(prompt),
            completion_tokens=_whitespace_tokens(response),
        )
        return response


# ---------------------------------------------------------------------------
# OpenAI-compatible HTTP providers


class _HttpBase:
    def __init__(self, config: ProviderConfig, usage: UsageMeter):
        self._config = config
        self._usage = usage
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers={"Authorization": f"Bearer {config.api_key}"},
            timeout=config.timeout_ms / 1000.0,
        )

    def _post(self, path: str, **kwargs) -> httpx.Response:
        last_exc: Exception | None = None
        for attempt in range(2):  # one reattempt, no more
            try:
                response = self._client.post(path, **kwargs)
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            if response.status_code >= 500 and attempt == 0:
                last_exc = ProviderError(
                    f"{path} returned {response.status_code}", status=response.status_code
                )
                continue
            if response.status_code >= 400:
                raise ProviderError(
                    f"{path} returned {response.status_code}: {response.text[:200]}",
                    status=response.status_code,
                )
            return response
        raise ProviderError(f"{path} failed after retry: {last_exc}")


class HttpTranscription(_HttpBase):
    def transcribe(self, audio: bytes) -> str:
        if not audio:
            raise InvalidInputError("empty audio payload")
        response = self._post(
            "/v1/audio/transcriptions",
            files={"file": ("audio.wav", audio, "application/octet-stream")},
            data={"model": self._config.transcribe_model},
        )
        try:
            text = response.json()["text"]
        except (json.JSONDecodeError, KeyError) as exc:
            raise ProviderError(f"malformed transcription response: {exc}") from exc
        self._usage.add(audio_seconds=len(audio) / 1000.0)
        return text


class HttpEmbedding(_HttpBase):
    def embed(self, texts: list[str]) -> list[list[float]]:
        for i, text in enumerate(texts):
            if not text:
                raise InvalidInputError(f"empty text at index {i}")
        response = self._post(
            "/v1/embeddings",
            json={"model": self._config.embed_model, "input": texts},
        )
        try:
            body = response.json()
            data = sorted(body["data"], key=lambda d: d["index"])
            vectors = [[float(x) for x in d["embedding"]] for d in data]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ProviderError(f"malformed embeddings response: {exc}") from exc
        usage = body.get("usage", {})
        self._usage.add(
            prompt_tokens=int(
                usage.get("prompt_tokens", sum(_whitespace_tokens(t) for t in texts))
            )
        )
        return vectors


class HttpChat(_HttpBase):
    def complete(self, prompt: str, response_format_hint: str = "free_text") -> str:
        if not prompt:
            raise InvalidInputError("empty prompt")
        payload: dict = {
            "model": self._config.chat_model,
            "messages": [{"role": "user", "content": prompt}],
        }
        if response_format_hint == "json_object":
            payload["response_format"] = {"type": "json_object"}
        response = self._post("/v1/chat/completions", json=payload)
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed chat response: {exc}") from exc
        usage = body.get("usage", {})
        self._usage.add(
            prompt_tokens=int(usage.get("prompt_tokens", _whitespace_tokens(prompt))),
            completion_tokens=int(
                usage.get("completion_tokens", _whitespace_tokens(text))
            ),
        )
        return text


# ---------------------------------------------------------------------------
# Wiring


@dataclass
class ProviderSet:
    mode: str
    transcription: MockTranscription | HttpTranscription
    embedding: MockEmbedding | HttpEmbedding
    chat: MockChat | HttpChat
    usage: UsageMeter


def build_providers(config: ProviderConfig) -> ProviderSet:
    """Instantiate the provider trio plus a shared usage meter."""
    config.validate()
    usage = UsageMeter()
    if config.mode == "mock":
        return ProviderSet(
            mode="mock",
            transcription=MockTranscription(usage),
            embedding=MockEmbedding(usage),
            chat=MockChat(usage, fixtures_dir=config.fixtures_dir),
            usage=usage,
        )
    return ProviderSet(
        mode="http",
        transcription=HttpTranscription(config, usage),
        embedding=HttpEmbedding(config, usage),
        chat=HttpChat(config, usage),
        usage=usage,
    )

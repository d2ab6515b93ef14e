"""Engine configuration and environment loading.

All knobs are plain dataclass fields; ``EngineConfig.from_env`` maps the
``AINSIGHT_*`` environment variables onto them so the CLI and the service
share one configuration surface.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError

DEFAULT_TICK_MS = 20_000
DEFAULT_TOP_K = 5
DEFAULT_MAX_CHUNK_CHARS = 1000
DEFAULT_OVERLAP_CHARS = 200
DEFAULT_MAX_INSIGHTS_PER_TICK = 2
DEFAULT_EMBED_DIM = 256
DEFAULT_TIMEOUT_MS = 30_000


def bundled_fixtures_dir() -> Path:
    """Filesystem path of the packaged fixtures (kb, mock responses, scripts)."""
    return Path(str(resources.files("ainsight").joinpath("fixtures")))


@dataclass
class ProviderConfig:
    """Settings for the transcription/embedding/chat providers."""

    mode: str = "mock"  # "mock" | "http"
    base_url: str = ""
    api_key: str = ""
    chat_model: str = "gpt-4o"
    embed_model: str = "text-embedding-3-small"
    transcribe_model: str = "whisper-1"
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    fixtures_dir: Path | None = None  # canned mock responses

    def validate(self) -> None:
        if self.mode not in ("mock", "http"):
            raise ConfigurationError(f"unknown provider mode {self.mode!r}")
        if self.timeout_ms <= 0:
            raise ConfigurationError("timeout_ms must be > 0")
        if self.mode == "http" and (not self.base_url or not self.api_key):
            raise ConfigurationError("http provider mode requires base_url and api_key")


@dataclass
class EngineConfig:
    """Everything the engine needs to ingest, serve and replay."""

    kb_dir: Path | None = None
    index_path: Path | None = None
    tick_ms: int = DEFAULT_TICK_MS
    top_k: int = DEFAULT_TOP_K
    max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS
    overlap_chars: int = DEFAULT_OVERLAP_CHARS
    max_insights_per_tick: int = DEFAULT_MAX_INSIGHTS_PER_TICK
    listen_addr: str = "127.0.0.1:8770"
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    prompts_dir: Path | None = None  # None -> packaged prompts
    fixture_tag: str | None = None  # default mock-fixture tag for new sessions

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "EngineConfig":
        """Build a config from ``AINSIGHT_*`` environment variables."""
        env = dict(os.environ if env is None else env)

        def _path(name: str) -> Path | None:
            raw = env.get(name, "").strip()
            return Path(raw) if raw else None

        def _int(name: str, default: int) -> int:
            raw = env.get(name, "").strip()
            if not raw:
                return default
            try:
                return int(raw)
            except ValueError as exc:
                raise ConfigurationError(f"{name} must be an integer, got {raw!r}") from exc

        provider = ProviderConfig(
            mode=env.get("AINSIGHT_PROVIDER_MODE", "mock").strip() or "mock",
            base_url=env.get("AINSIGHT_BASE_URL", "").strip(),
            api_key=env.get("AINSIGHT_API_KEY", "").strip(),
            chat_model=env.get("AINSIGHT_CHAT_MODEL", "gpt-4o").strip() or "gpt-4o",
            embed_model=env.get("AINSIGHT_EMBED_MODEL", "text-embedding-3-small").strip()
            or "text-embedding-3-small",
            transcribe_model=env.get("AINSIGHT_TRANSCRIBE_MODEL", "whisper-1").strip()
            or "whisper-1",
            timeout_ms=_int("AINSIGHT_TIMEOUT_MS", DEFAULT_TIMEOUT_MS),
            fixtures_dir=_path("AINSIGHT_MOCK_FIXTURES_DIR"),
        )
        provider.validate()
        config = cls(
            kb_dir=_path("AINSIGHT_KB_DIR"),
            index_path=_path("AINSIGHT_INDEX_PATH"),
            tick_ms=_int("AINSIGHT_TICK_MS", DEFAULT_TICK_MS),
            top_k=_int("AINSIGHT_TOP_K", DEFAULT_TOP_K),
            listen_addr=env.get("AINSIGHT_LISTEN_ADDR", "127.0.0.1:8770").strip()
            or "127.0.0.1:8770",
            provider=provider,
        )
        if config.tick_ms <= 0:
            raise ConfigurationError("AINSIGHT_TICK_MS must be > 0")
        if config.top_k < 1:
            raise ConfigurationError("AINSIGHT_TOP_K must be >= 1")
        return config

"""Engine: shared index, providers and table registry behind a session map.

One engine serves many sessions. The index and registry are read-only at
serve time, so sessions share them without coordination; each session
serializes its own mutations. A background scheduler thread pumps every
session on a short interval so ticks fire close to their due times even
when no requests arrive.
"""

from __future__ import annotations

import logging
import threading
import uuid

from .clock import Clock, WallClock
from .config import EngineConfig
from .errors import (
    ConfigurationError,
    EmptyKnowledgeBaseError,
    InvalidInputError,
    UnknownSessionError,
)
from .ingest import load_tables, read_manifest
from .pipeline import PromptLibrary, Session
from .providers import ProviderSet, UsageReport, build_providers
from .tablequery import TableRegistry
from .vindex import VectorIndex

logger = logging.getLogger(__name__)


class Engine:
    def __init__(
        self,
        *,
        config: EngineConfig,
        index: VectorIndex,
        registry: TableRegistry | None = None,
        providers: ProviderSet | None = None,
        clock: Clock | None = None,
        prompts: PromptLibrary | None = None,
    ):
        self.config = config
        self.index = index
        self.registry = registry if registry is not None else TableRegistry()
        self.providers = providers if providers is not None else build_providers(config.provider)
        self.clock = clock if clock is not None else WallClock()
        self.prompts = prompts if prompts is not None else PromptLibrary(config.prompts_dir)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._scheduler: threading.Thread | None = None
        self._stop = threading.Event()

    @classmethod
    def from_config(cls, config: EngineConfig, clock: Clock | None = None) -> "Engine":
        """Load the persisted index (and its manifest's tables) and wire up
        providers. Fails fast when the index is missing or unreadable."""
        if config.index_path is None:
            raise ConfigurationError("index_path is required to start an engine")
        index = VectorIndex.load(config.index_path)
        registry = TableRegistry()
        try:
            manifest = read_manifest(config.index_path)
        except ConfigurationError as exc:
            manifest = None
            logger.warning("no usable manifest beside index: %s", exc)
        if manifest is not None:
            kb_root = config.kb_dir if config.kb_dir is not None else manifest.kb_root
            load_tables(kb_root, manifest.sources, registry)
        return cls(config=config, index=index, registry=registry, clock=clock)

    # -- sessions ------------------------------------------------------------

    def create_session(
        self, session_id: str | None = None, fixture_tag: str | None = None
    ) -> Session:
        if len(self.index) == 0:
            raise EmptyKnowledgeBaseError("cannot start sessions over an empty index")
        sid = session_id if session_id is not None else uuid.uuid4().hex
        with self._lock:
            if sid in self._sessions:
                raise InvalidInputError(f"session {sid!r} already exists")
            session = Session(
                sid,
                index=self.index,
                registry=self.registry,
                providers=self.providers,
                prompts=self.prompts,
                config=self.config,
                clock=self.clock,
                fixture_tag=fixture_tag or self.config.fixture_tag,
            )
            self._sessions[sid] = session
        return session

    def get_session(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"no session {session_id!r}")
        return session

    def sessions(self) -> list[Session]:
        with self._lock:
            return list(self._sessions.values())

    # -- scheduling ----------------------------------------------------------

    def pump_all(self, now_ms: int | None = None) -> None:
        """Run due ticks on every session (manual pump for simulated clocks)."""
        now = self.clock.now_ms() if now_ms is None else now_ms
        for session in self.sessions():
            session.pump(now)

    def start_scheduler(self, interval_s: float = 0.25) -> None:
        if self._scheduler is not None:
            return
        self._stop.clear()

        def loop() -> None:
            while not self._stop.is_set():
                try:
                    self.pump_all()
                except Exception:
                    logger.exception("scheduler pump failed")
                self._stop.wait(interval_s)

        self._scheduler = threading.Thread(target=loop, name="ainsight-scheduler", daemon=True)
        self._scheduler.start()

    def stop_scheduler(self) -> None:
        if self._scheduler is None:
            return
        self._stop.set()
        self._scheduler.join(timeout=5.0)
        self._scheduler = None

    # -- introspection -------------------------------------------------------

    @property
    def usage(self) -> UsageReport:
        return self.providers.usage.snapshot()

    def health(self) -> dict:
        return {
            "status": "ok",
            "index_size": len(self.index),
            "tables": len(self.registry),
            "provider_mode": self.config.provider.mode,
            "sessions": len(self._sessions),
        }

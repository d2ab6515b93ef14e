"""Shared fixtures: a bundled-KB index built once per test session."""

from __future__ import annotations

from pathlib import Path

import pytest

from ainsight.clock import SimulatedClock
from ainsight.config import EngineConfig, bundled_fixtures_dir
from ainsight.engine import Engine
from ainsight.ingest import ingest_kb
from ainsight.providers import build_providers


@pytest.fixture(scope="session")
def bundled_kb() -> Path:
    return bundled_fixtures_dir() / "kb"


@pytest.fixture(scope="session")
def bundled_index_path(tmp_path_factory, bundled_kb) -> Path:
    """The bundled KB ingested once; engines in tests load from here."""
    path = tmp_path_factory.mktemp("index") / "index.ldjson"
    providers = build_providers(EngineConfig().provider)
    ingest_kb(bundled_kb, path, providers.embedding.embed)
    return path


@pytest.fixture
def make_engine(bundled_kb, bundled_index_path):
    """Factory for engines over the bundled KB on a simulated clock."""

    def make(clock: SimulatedClock | None = None, **overrides) -> Engine:
        config = EngineConfig(
            kb_dir=bundled_kb, index_path=bundled_index_path, **overrides
        )
        return Engine.from_config(config, clock=clock or SimulatedClock(0))

    return make

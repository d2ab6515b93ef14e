"""Real-time conversation insight engine.

Ingests a knowledge directory into a cosine-similarity index, then runs
tick-driven sessions that extract structured state from a live transcript,
retrieve the most relevant chunks and generate grounded insights, exposed
over an HTTP/SSE API and a scripted replay harness.
"""

from .clock import Clock, SimulatedClock, WallClock
from .config import EngineConfig, ProviderConfig, bundled_fixtures_dir
from .engine import Engine
from .errors import (
    AinsightError,
    ConfigurationError,
    EmptyKnowledgeBaseError,
    EmptySourceError,
    EvaluationError,
    IndexLoadError,
    IngestAbortedError,
    InvalidInputError,
    InvalidStateError,
    ProviderError,
    QueryParseError,
    SessionFinishedError,
    TableLoadError,
    UnknownSessionError,
)
from .ingest import ingest_kb, scan_kb
from .pipeline import Session, SnapshotFeed
from .replay import (
    DialogueScript,
    DialogueTurn,
    ReplayMetrics,
    export_metrics,
    load_script,
    run_replay,
)
from .state import ExtractedState, Insight, Snapshot, TickReport, TranscriptSegment
from .tablequery import (
    Table,
    TableQuery,
    TableRegistry,
    evaluate,
    format_result,
    load_table,
    parse_query,
    render_query,
)
from .vindex import EmbeddingRecord, SearchHit, VectorIndex, cosine_similarity

__version__ = "0.1.0"

__all__ = [
    "AinsightError",
    "Clock",
    "ConfigurationError",
    "DialogueScript",
    "DialogueTurn",
    "EmbeddingRecord",
    "EmptyKnowledgeBaseError",
    "EmptySourceError",
    "Engine",
    "EngineConfig",
    "EvaluationError",
    "ExtractedState",
    "IndexLoadError",
    "IngestAbortedError",
    "Insight",
    "InvalidInputError",
    "InvalidStateError",
    "ProviderConfig",
    "ProviderError",
    "QueryParseError",
    "ReplayMetrics",
    "SearchHit",
    "Session",
    "SessionFinishedError",
    "SimulatedClock",
    "Snapshot",
    "SnapshotFeed",
    "Table",
    "TableLoadError",
    "TableQuery",
    "TableRegistry",
    "TickReport",
    "TranscriptSegment",
    "UnknownSessionError",
    "VectorIndex",
    "WallClock",
    "bundled_fixtures_dir",
    "cosine_similarity",
    "evaluate",
    "export_metrics",
    "format_result",
    "ingest_kb",
    "load_script",
    "load_table",
    "parse_query",
    "render_query",
    "run_replay",
    "scan_kb",
    "__version__",
]

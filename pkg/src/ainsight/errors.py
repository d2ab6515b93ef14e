"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class AinsightError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(AinsightError):
    """Bad or missing configuration (paths, env vars, provider settings)."""


class EmptyKnowledgeBaseError(AinsightError):
    """The knowledge base has no eligible files or the index is empty."""


class InvalidInputError(AinsightError):
    """A caller-supplied value violates an operation's contract."""


class EmptySourceError(AinsightError):
    """A knowledge-base file had no content to chunk."""


class IngestAbortedError(AinsightError):
    """Embedding/indexing failed part-way; reports how much was committed."""

    def __init__(self, message: str, committed_chunks: int):
        super().__init__(f"{message} ({committed_chunks} chunks already committed)")
        self.committed_chunks = committed_chunks


class ProviderError(AinsightError):
    """A provider call failed (transport, HTTP status, timeout)."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class IndexLoadError(AinsightError):
    """Persisted index file failed to parse; carries the offending line."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TableLoadError(AinsightError):
    """CSV table failed to load; carries the offending row index when known."""

    def __init__(self, message: str, row_index: int | None = None):
        super().__init__(message)
        self.row_index = row_index


class QueryParseError(AinsightError):
    """Table-query text did not match the grammar."""

    def __init__(self, position: int, expected: str, found: str):
        super().__init__(f"at offset {position}: expected {expected}, found {found}")
        self.position = position
        self.expected = expected
        self.found = found


class EvaluationError(AinsightError):
    """A parsed table query referenced an unknown column or broke a type rule."""


class UnknownSessionError(AinsightError):
    """No session with the given id."""


class SessionFinishedError(AinsightError):
    """The session is finished and rejects segments and ticks."""


class InvalidStateError(AinsightError):
    """An operation ran against state that cannot support it (e.g. retrieval on an empty extraction)."""

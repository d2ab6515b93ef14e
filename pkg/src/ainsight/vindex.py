"""Brute-force cosine top-k vector index with line-delimited JSON persistence.

Desk-scale corpora do not need an ANN structure: a full scan is exact,
trivially testable against an oracle, and fast enough with numpy doing the
arithmetic. Records are keyed by chunk id; ties on equal scores break by
chunk id ascending so searches are reproducible.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IndexLoadError, InvalidInputError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class EmbeddingRecord:
    """One embedded chunk as stored in the index."""

    chunk_id: str
    vector: tuple[float, ...]
    source_path: str
    kind: str  # "text" | "table_descriptor"
    text: str


@dataclass(frozen=True)
class SearchHit:
    """One search result, highest similarity first."""

    chunk_id: str
    score: float
    source_path: str
    kind: str
    text: str


def _check_vector(vector: tuple[float, ...] | list[float], what: str = "vector") -> None:
    if len(vector) == 0:
        raise InvalidInputError(f"{what} is empty")
    if not all(math.isfinite(x) for x in vector):
        raise InvalidInputError(f"{what} has non-finite components")
    if all(x == 0.0 for x in vector):
        raise InvalidInputError(f"{what} has zero norm")


def cosine_similarity(a: list[float] | tuple[float, ...], b: list[float] | tuple[float, ...]) -> float:
    """Cosine of the angle between two equal-dimension, non-zero vectors."""
    if len(a) != len(b):
        raise InvalidInputError(f"dimension mismatch: {len(a)} vs {len(b)}")
    _check_vector(a, "first vector")
    _check_vector(b, "second vector")
    dot = sum(x * y for x, y in zip(a, b))
    return dot / (math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b)))


class VectorIndex:
    """In-memory exact-kNN index over ``EmbeddingRecord``s.

    Concurrency contract: any number of concurrent searches OR one writer.
    Mutations rebuild an immutable snapshot (ids + matrix) under one lock;
    searches only ever touch a complete snapshot, so no torn reads.
    """

    def __init__(self) -> None:
        self._records: dict[str, EmbeddingRecord] = {}
        self._dimension: int | None = None
        self._lock = threading.Lock()
        self._snapshot: tuple[list[str], np.ndarray, np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self._records)

    @property
    def dimension(self) -> int | None:
        """Vector dimension, fixed by the first upsert; None while empty."""
        return self._dimension

    def upsert(self, record: EmbeddingRecord) -> bool:
        """Store (or replace) a record. Returns True iff the id already existed."""
        _check_vector(record.vector, f"record {record.chunk_id}")
        with self._lock:
            if self._dimension is None:
                self._dimension = len(record.vector)
            elif len(record.vector) != self._dimension:
                raise InvalidInputError(
                    f"record {record.chunk_id} has dimension {len(record.vector)}, "
                    f"index has {self._dimension}"
                )
            existed = record.chunk_id in self._records
            self._records[record.chunk_id] = record
            self._snapshot = None
            return existed

    def get(self, chunk_id: str) -> EmbeddingRecord | None:
        return self._records.get(chunk_id)

    def __contains__(self, chunk_id: str) -> bool:
        return chunk_id in self._records

    def _snap(self) -> tuple[list[str], np.ndarray, np.ndarray]:
        snap = self._snapshot
        if snap is None:
            with self._lock:
                snap = self._snapshot
                if snap is None:
                    ids = sorted(self._records)
                    matrix = np.array(
                        [self._records[i].vector for i in ids], dtype=np.float64
                    )
                    norms = np.linalg.norm(matrix, axis=1) if ids else np.array([])
                    snap = (ids, matrix, norms)
                    self._snapshot = snap
        return snap

    def search(self, query: list[float] | tuple[float, ...], k: int) -> list[SearchHit]:
        """Exact top-k by cosine similarity; fewer than k hits iff the index is smaller."""
        if k < 1:
            raise InvalidInputError("k must be >= 1")
        if not self._records:
            return []
        if len(query) != self._dimension:
            raise InvalidInputError(
                f"query dimension {len(query)} does not match index dimension {self._dimension}"
            )
        _check_vector(query, "query")
        ids, matrix, norms = self._snap()
        q = np.asarray(query, dtype=np.float64)
        scores = (matrix @ q) / (norms * float(np.linalg.norm(q)))
        # ids are ascending, so a stable sort on -score realizes the tie-break.
        order = np.argsort(-scores, kind="stable")[:k]
        records = self._records
        return [
            SearchHit(
                chunk_id=ids[i],
                score=float(scores[i]),
                source_path=records[ids[i]].source_path,
                kind=records[ids[i]].kind,
                text=records[ids[i]].text,
            )
            for i in order
        ]

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> int:
        """Write the index as line-delimited JSON; returns the record count.

        First line is a header object, then one record per line in chunk_id
        order: a canonical layout, so identical contents give identical bytes.
        """
        path = Path(path)
        with self._lock:
            ids = sorted(self._records)
            lines = [
                json.dumps(
                    {
                        "dimension": self._dimension if self._dimension is not None else 0,
                        "count": len(ids),
                        "format_version": FORMAT_VERSION,
                    },
                    separators=(",", ":"),
                )
            ]
            for chunk_id in ids:
                rec = self._records[chunk_id]
                lines.append(
                    json.dumps(
                        {
                            "chunk_id": rec.chunk_id,
                            "vector": list(rec.vector),
                            "source_path": rec.source_path,
                            "kind": rec.kind,
                            "text": rec.text,
                        },
                        separators=(",", ":"),
                        ensure_ascii=False,
                    )
                )
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            return len(ids)

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        """Load an index saved by :meth:`save`; parse errors name the bad line."""
        path = Path(path)
        if not path.exists():
            raise IndexLoadError(f"index file {path} does not exist", 0)
        index = cls()
        with path.open(encoding="utf-8") as fh:
            try:
                header_line = next(fh)
            except StopIteration:
                raise IndexLoadError("file is empty, expected header", 1) from None
            try:
                header = json.loads(header_line)
            except json.JSONDecodeError as exc:
                raise IndexLoadError(f"bad header: {exc.msg}", 1) from exc
            if not isinstance(header, dict) or "count" not in header:
                raise IndexLoadError("header object missing 'count'", 1)
            if header.get("format_version") != FORMAT_VERSION:
                raise IndexLoadError(
                    f"unsupported format_version {header.get('format_version')!r}", 1
                )
            expected = header["count"]
            line_no = 1
            for line in fh:
                line_no += 1
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IndexLoadError(f"bad record: {exc.msg}", line_no) from exc
                try:
                    record = EmbeddingRecord(
                        chunk_id=obj["chunk_id"],
                        vector=tuple(float(x) for x in obj["vector"]),
                        source_path=obj["source_path"],
                        kind=obj["kind"],
                        text=obj["text"],
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise IndexLoadError(f"bad record: {exc}", line_no) from exc
                try:
                    index.upsert(record)
                except InvalidInputError as exc:
                    raise IndexLoadError(str(exc), line_no) from exc
        if len(index) != expected:
            raise IndexLoadError(
                f"header says {expected} records, file has {len(index)}", line_no
            )
        return index

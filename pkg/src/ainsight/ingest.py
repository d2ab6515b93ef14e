"""Knowledge-base ingestion: scan, chunk, describe tables, embed, index.

A knowledge base is a directory tree of ``.txt``/``.md`` documents and
``.csv`` tables. Text files are split into overlapping chunks; each CSV
contributes a single table-descriptor chunk (the table itself is answered
through the query tool, not pasted into prompts) plus a registration in
the :class:`~ainsight.tablequery.TableRegistry`.

Everything here is deterministic in the directory contents and parameters:
ids are digests of relative paths, chunk ordinals are zero-padded, and no
timestamps leak into chunk ids or texts, so rebuilding an index over
unchanged inputs yields identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    ConfigurationError,
    EmptyKnowledgeBaseError,
    EmptySourceError,
    IngestAbortedError,
    InvalidInputError,
    ProviderError,
    TableLoadError,
)
from .tablequery import Table, TableRegistry, load_table
from .vindex import EmbeddingRecord, VectorIndex

logger = logging.getLogger(__name__)

TEXT_EXTENSIONS = {".txt", ".md"}
TABLE_EXTENSIONS = {".csv"}
EMBED_BATCH_SIZE = 64


@dataclass(frozen=True)
class KnowledgeSource:
    """One eligible file under the knowledge-base root."""

    source_id: str
    path: str  # relative, posix separators
    kind: str  # "unstructured_text" | "structured_table"
    byte_size: int


@dataclass(frozen=True)
class KnowledgeChunk:
    """An embeddable unit: a text span or a table descriptor."""

    chunk_id: str
    source_id: str
    kind: str  # "text" | "table_descriptor"
    text: str
    char_range: tuple[int, int] | None = None
    metadata: dict[str, str] | None = None


@dataclass
class KbManifest:
    kb_root: str
    sources: list[KnowledgeSource]
    chunk_count: int
    created_at_ms: int
    chunking_params: tuple[int, int]  # (max_chunk_chars, overlap_chars)


def source_id_for(rel_path: str) -> str:
    """Stable id for a source: digest of its relative path."""
    return hashlib.sha256(rel_path.encode("utf-8")).hexdigest()[:16]


def scan_kb(kb_root: str | Path) -> list[KnowledgeSource]:
    """Find every eligible file under *kb_root*, sorted by path ascending."""
    root = Path(kb_root)
    if not root.is_dir():
        raise ConfigurationError(f"knowledge base directory {root} does not exist")
    sources = []
    for path in root.rglob("*"):
        if not path.is_file():
            continue
        ext = path.suffix.lower()
        if ext in TEXT_EXTENSIONS:
            kind = "unstructured_text"
        elif ext in TABLE_EXTENSIONS:
            kind = "structured_table"
        else:
            continue
        rel = path.relative_to(root).as_posix()
        sources.append(
            KnowledgeSource(
                source_id=source_id_for(rel),
                path=rel,
                kind=kind,
                byte_size=path.stat().st_size,
            )
        )
    if not sources:
        raise EmptyKnowledgeBaseError(
            f"no .txt/.md/.csv files under {root}; refusing to build an empty knowledge base"
        )
    sources.sort(key=lambda s: s.path.encode("utf-8"))
    return sources


def chunk_text(
    source: KnowledgeSource,
    content: str,
    max_chunk_chars: int,
    overlap_chars: int,
) -> list[KnowledgeChunk]:
    """Split *content* into overlapping chunks covering it exactly.

    Split points prefer the last whitespace at or before the size limit;
    consecutive chunks overlap by roughly *overlap_chars*. Every chunk is a
    verbatim slice, so stitching them back together (dropping each overlap)
    reconstructs the content byte for byte.
    """
    if overlap_chars < 0 or max_chunk_chars <= overlap_chars:
        raise InvalidInputError(
            f"need max_chunk_chars > overlap_chars >= 0, "
            f"got {max_chunk_chars} and {overlap_chars}"
        )
    if not content:
        raise EmptySourceError(f"source {source.path} is empty")

    chunks: list[KnowledgeChunk] = []
    start = 0
    n = len(content)
    while True:
        hard_end = min(start + max_chunk_chars, n)
        end = hard_end
        if hard_end < n:
            for i in range(hard_end - 1, start, -1):
                if content[i].isspace():
                    if i + 1 - start > overlap_chars:
                        end = i + 1
                    break
        chunks.append(
            KnowledgeChunk(
                chunk_id=f"{source.source_id}#{len(chunks):04d}",
                source_id=source.source_id,
                kind="text",
                text=content[start:end],
                char_range=(start, end),
            )
        )
        if end >= n:
            return chunks
        start = end - overlap_chars


def describe_table(
    table_id: str,
    header: list[str],
    sample_row: list[object],
    row_count: int,
    *,
    source_id: str | None = None,
) -> KnowledgeChunk:
    """Build the embeddable descriptor chunk for a structured table."""
    if not header:
        raise InvalidInputError(f"table {table_id!r} has an empty header")

    def fmt(value: object) -> str:
        if isinstance(value, float) and value == int(value):
            return str(int(value))
        return "" if value is None else str(value)

    pairs = ", ".join(f"{name}={fmt(v)}" for name, v in zip(header, sample_row))
    text = (
        f"Structured table '{table_id}' with {row_count} rows. "
        f"Columns: {', '.join(header)}. "
        f"Sample row: {pairs}."
    )
    sid = source_id if source_id is not None else source_id_for(table_id)
    return KnowledgeChunk(
        chunk_id=f"{sid}#0000",
        source_id=sid,
        kind="table_descriptor",
        text=text,
        metadata={"table_id": table_id},
    )


def assign_table_ids(sources: list[KnowledgeSource]) -> dict[str, str]:
    """Map structured sources (by source_id) to friendly table ids.

    The file stem is the id; on a stem collision the source id disambiguates.
    Sources must already be in scan order for determinism.
    """
    ids: dict[str, str] = {}
    seen: set[str] = set()
    for source in sources:
        if source.kind != "structured_table":
            continue
        stem = Path(source.path).stem
        table_id = stem if stem not in seen else f"{stem}_{source.source_id[:8]}"
        seen.add(table_id)
        ids[source.source_id] = table_id
    return ids


def load_tables(
    kb_root: str | Path, sources: list[KnowledgeSource], registry: TableRegistry
) -> None:
    """Load and register every structured source; bad CSVs are skipped with a warning."""
    root = Path(kb_root)
    table_ids = assign_table_ids(sources)
    for source in sources:
        if source.kind != "structured_table":
            continue
        try:
            content = (root / source.path).read_text(encoding="utf-8")
            registry.register(load_table(table_ids[source.source_id], content))
        except (OSError, UnicodeDecodeError, TableLoadError) as exc:
            logger.warning("skipping table %s: %s", source.path, exc)


def build_index(
    sources: list[KnowledgeSource],
    embed,
    index: VectorIndex,
    *,
    kb_root: str | Path,
    registry: TableRegistry | None = None,
    max_chunk_chars: int = 1000,
    overlap_chars: int = 200,
    now_ms: int | None = None,
) -> KbManifest:
    """Chunk, embed and upsert every source; returns the manifest.

    Deterministic ids make this idempotent: rebuilding over an existing
    index with identical inputs replaces records with identical ones. On a
    provider failure the partially built index stays loadable and the
    raised :class:`IngestAbortedError` reports the committed chunk count.
    """
    if not sources:
        raise EmptyKnowledgeBaseError("no sources to index")
    root = Path(kb_root)
    registry = registry if registry is not None else TableRegistry()
    table_ids = assign_table_ids(sources)

    chunks: list[KnowledgeChunk] = []
    source_paths: dict[str, str] = {}
    for source in sources:
        source_paths[source.source_id] = source.path
        try:
            content = (root / source.path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            logger.warning("skipping unreadable source %s: %s", source.path, exc)
            continue
        if source.kind == "structured_table":
            try:
                table = load_table(table_ids[source.source_id], content)
            except TableLoadError as exc:
                logger.warning("skipping table %s: %s", source.path, exc)
                continue
            registry.register(table)
            sample: list[object] = list(table.rows[0]) if table.rows else []
            chunks.append(
                describe_table(
                    table.table_id,
                    [name for name, _ in table.columns],
                    sample,
                    len(table.rows),
                    source_id=source.source_id,
                )
            )
        else:
            try:
                chunks.extend(chunk_text(source, content, max_chunk_chars, overlap_chars))
            except EmptySourceError:
                logger.warning("skipping empty source %s", source.path)

    committed = 0
    for batch_start in range(0, len(chunks), EMBED_BATCH_SIZE):
        batch = chunks[batch_start : batch_start + EMBED_BATCH_SIZE]
        try:
            vectors = embed([chunk.text for chunk in batch])
        except ProviderError as exc:
            raise IngestAbortedError(f"embedding failed: {exc}", committed) from exc
        for chunk, vector in zip(batch, vectors):
            index.upsert(
                EmbeddingRecord(
                    chunk_id=chunk.chunk_id,
                    vector=tuple(vector),
                    source_path=source_paths[chunk.source_id],
                    kind=chunk.kind,
                    text=chunk.text,
                )
            )
            committed += 1

    return KbManifest(
        kb_root=str(root),
        sources=sources,
        chunk_count=len(chunks),
        created_at_ms=int(time.time() * 1000) if now_ms is None else now_ms,
        chunking_params=(max_chunk_chars, overlap_chars),
    )


def manifest_path_for(index_path: str | Path) -> Path:
    return Path(index_path).parent / "manifest.json"


def write_manifest(manifest: KbManifest, index_path: str | Path) -> Path:
    """Persist the manifest as ``manifest.json`` beside the index file."""
    path = manifest_path_for(index_path)
    payload = {
        "kb_root": manifest.kb_root,
        "sources": [
            {
                "source_id": s.source_id,
                "path": s.path,
                "kind": s.kind,
                "byte_size": s.byte_size,
            }
            for s in manifest.sources
        ],
        "chunk_count": manifest.chunk_count,
        "created_at_ms": manifest.created_at_ms,
        "chunking_params": {
            "max_chunk_chars": manifest.chunking_params[0],
            "overlap_chars": manifest.chunking_params[1],
        },
    }
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def read_manifest(index_path: str | Path) -> KbManifest:
    path = manifest_path_for(index_path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"manifest {path} is not valid JSON: {exc}") from exc
    return KbManifest(
        kb_root=payload["kb_root"],
        sources=[
            KnowledgeSource(
                source_id=s["source_id"],
                path=s["path"],
                kind=s["kind"],
                byte_size=s["byte_size"],
            )
            for s in payload["sources"]
        ],
        chunk_count=payload["chunk_count"],
        created_at_ms=payload["created_at_ms"],
        chunking_params=(
            payload["chunking_params"]["max_chunk_chars"],
            payload["chunking_params"]["overlap_chars"],
        ),
    )


def ingest_kb(
    kb_dir: str | Path,
    index_path: str | Path,
    embed,
    *,
    max_chunk_chars: int = 1000,
    overlap_chars: int = 200,
) -> KbManifest:
    """Scan, chunk, embed, index and persist. The CLI's ingest path."""
    sources = scan_kb(kb_dir)
    index = VectorIndex()
    manifest = build_index(
        sources,
        embed,
        index,
        kb_root=kb_dir,
        max_chunk_chars=max_chunk_chars,
        overlap_chars=overlap_chars,
    )
    index_path = Path(index_path)
    index_path.parent.mkdir(parents=True, exist_ok=True)
    index.save(index_path)
    write_manifest(manifest, index_path)
    logger.info(
        "indexed %d chunks from %d sources into %s",
        manifest.chunk_count,
        len(sources),
        index_path,
    )
    return manifest

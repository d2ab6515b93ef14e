"""Ingest tests: chunking invariants, scanning, table descriptors, manifests."""

from __future__ import annotations

import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ainsight.errors import (
    ConfigurationError,
    EmptyKnowledgeBaseError,
    EmptySourceError,
    IngestAbortedError,
    InvalidInputError,
    ProviderError,
)
from ainsight.ingest import (
    KnowledgeSource,
    assign_table_ids,
    build_index,
    chunk_text,
    describe_table,
    ingest_kb,
    read_manifest,
    scan_kb,
    source_id_for,
    write_manifest,
)
from ainsight.providers import MockEmbedding, UsageMeter
from ainsight.tablequery import TableRegistry
from ainsight.vindex import VectorIndex


def source(path="doc.txt", kind="unstructured_text") -> KnowledgeSource:
    return KnowledgeSource(
        source_id=source_id_for(path), path=path, kind=kind, byte_size=0
    )


def mock_embed(texts):
    return MockEmbedding(UsageMeter()).embed(texts)


class TestChunkText:
    def test_worked_example(self):
        chunks = chunk_text(source(), "aa bb cc dd", 6, 3)
        assert [c.text for c in chunks] == ["aa bb ", "bb cc ", "cc dd"]
        assert [c.char_range for c in chunks] == [(0, 6), (3, 9), (6, 11)]

    def test_single_chunk_when_short(self):
        chunks = chunk_text(source(), "short", 100, 10)
        assert len(chunks) == 1
        assert chunks[0].text == "short"
        assert chunks[0].char_range == (0, 5)

    def test_chunk_ids_are_ordinal(self):
        chunks = chunk_text(source(), "x" * 250, 100, 10)
        sid = source_id_for("doc.txt")
        assert [c.chunk_id for c in chunks] == [f"{sid}#{i:04d}" for i in range(len(chunks))]
        assert len(chunks) > 1

    def test_no_whitespace_fallback_is_hard_split(self):
        chunks = chunk_text(source(), "a" * 10, 4, 1)
        assert all(len(c.text) <= 4 for c in chunks)
        assert chunks[0].char_range == (0, 4)
        assert chunks[1].char_range == (3, 7)

    def test_empty_content_raises(self):
        with pytest.raises(EmptySourceError):
            chunk_text(source(), "", 100, 10)

    def test_bad_params_raise(self):
        with pytest.raises(InvalidInputError):
            chunk_text(source(), "abc", 10, 10)
        with pytest.raises(InvalidInputError):
            chunk_text(source(), "abc", 10, -1)

    @given(
        content=st.text(
            alphabet=st.characters(codec="utf-8", exclude_categories=("Cs",)),
            min_size=1,
            max_size=2500,
        ),
        max_chars=st.integers(min_value=2, max_value=400),
        overlap=st.integers(min_value=0, max_value=399),
    )
    @settings(max_examples=200, deadline=None)
    def test_chunking_invariants(self, content, max_chars, overlap):
        if overlap >= max_chars:
            overlap = max_chars - 1
        chunks = chunk_text(source(), content, max_chars, overlap)

        assert chunks[0].char_range[0] == 0
        assert chunks[-1].char_range[1] == len(content)
        for chunk in chunks:
            start, end = chunk.char_range
            assert content[start:end] == chunk.text
            assert 0 < len(chunk.text) <= max_chars
        for prev, nxt in zip(chunks, chunks[1:]):
            assert nxt.char_range[0] == prev.char_range[1] - overlap
        rebuilt = chunks[0].text + "".join(c.text[overlap:] for c in chunks[1:])
        assert rebuilt == content


class TestScanKb:
    def test_orders_and_filters(self, tmp_path):
        (tmp_path / "b").mkdir()
        (tmp_path / "a.txt").write_text("one")
        (tmp_path / "b" / "c.md").write_text("two")
        (tmp_path / "b" / "d.csv").write_text("x\n1")
        (tmp_path / "skip.bin").write_bytes(b"\x00")
        (tmp_path / "skip.json").write_text("{}")
        sources = scan_kb(tmp_path)
        assert [s.path for s in sources] == ["a.txt", "b/c.md", "b/d.csv"]
        assert [s.kind for s in sources] == [
            "unstructured_text",
            "unstructured_text",
            "structured_table",
        ]
        for s in sources:
            assert s.source_id == hashlib.sha256(s.path.encode()).hexdigest()[:16]

    def test_empty_dir_raises(self, tmp_path):
        with pytest.raises(EmptyKnowledgeBaseError):
            scan_kb(tmp_path)

    def test_missing_dir_raises(self, tmp_path):
        with pytest.raises(ConfigurationError):
            scan_kb(tmp_path / "nope")


class TestTableDescriptors:
    def test_describe_table_text(self):
        chunk = describe_table(
            "survey", ["Age", "Province"], [20.0, "Ontario"], 3, source_id="abc123"
        )
        assert chunk.text == (
            "Structured table 'survey' with 3 rows. "
            "Columns: Age, Province. Sample row: Age=20, Province=Ontario."
        )
        assert chunk.chunk_id == "abc123#0000"
        assert chunk.kind == "table_descriptor"
        assert chunk.metadata == {"table_id": "survey"}

    def test_table_id_collision_uses_source_id(self):
        a = source("x/data.csv", "structured_table")
        b = source("y/data.csv", "structured_table")
        ids = assign_table_ids([a, b])
        assert ids[a.source_id] == "data"  # first in scan order keeps the stem
        assert ids[b.source_id] == f"data_{b.source_id[:8]}"

    def test_unique_stems_stay_plain(self):
        a = source("x/alpha.csv", "structured_table")
        b = source("y/beta.csv", "structured_table")
        ids = assign_table_ids([a, b])
        assert ids[a.source_id] == "alpha"
        assert ids[b.source_id] == "beta"


class TestBuildIndex:
    def test_bundled_kb_counts(self, bundled_kb):
        sources = scan_kb(bundled_kb)
        index = VectorIndex()
        registry = TableRegistry()
        manifest = build_index(
            sources, mock_embed, index, kb_root=bundled_kb, registry=registry
        )
        assert manifest.chunk_count == len(index) == 13
        assert len(sources) == 12
        assert registry.ids() == ["pain_relievers", "survey"]
        kinds = {index.get(cid).kind for cid in iter_chunk_ids(index)}
        assert kinds == {"text", "table_descriptor"}

    def test_provider_failure_aborts_with_committed_count(self, tmp_path):
        for i in range(3):
            (tmp_path / f"doc{i}.txt").write_text(f"document {i} " * 20)
        sources = scan_kb(tmp_path)
        calls = {"n": 0}

        def failing_embed(texts):
            calls["n"] += 1
            raise ProviderError("boom")

        index = VectorIndex()
        with pytest.raises(IngestAbortedError) as excinfo:
            build_index(sources, failing_embed, index, kb_root=tmp_path)
        assert excinfo.value.committed_chunks == 0
        assert calls["n"] == 1

    def test_undecodable_and_empty_sources_skipped(self, tmp_path):
        (tmp_path / "good.txt").write_text("hello world")
        (tmp_path / "empty.txt").write_text("")
        (tmp_path / "bad.txt").write_bytes(b"\xff\xfe\x00broken")
        sources = scan_kb(tmp_path)
        assert len(sources) == 3
        index = VectorIndex()
        manifest = build_index(sources, mock_embed, index, kb_root=tmp_path)
        assert manifest.chunk_count == 1
        assert len(index) == 1

    def test_no_sources_raises(self, tmp_path):
        with pytest.raises(EmptyKnowledgeBaseError):
            build_index([], mock_embed, VectorIndex(), kb_root=tmp_path)


def iter_chunk_ids(index: VectorIndex):
    # reach through the persistence layer to enumerate ids without private access
    import tempfile
    from pathlib import Path
    import json as _json

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "i.ldjson"
        index.save(path)
        lines = path.read_text().splitlines()[1:]
        return [_json.loads(line)["chunk_id"] for line in lines]


class TestManifest:
    def test_round_trip(self, tmp_path):
        (tmp_path / "doc.txt").write_text("hello world, this is content")
        sources = scan_kb(tmp_path)
        index_path = tmp_path / "index.ldjson"
        index = VectorIndex()
        manifest = build_index(
            sources, mock_embed, index, kb_root=tmp_path, now_ms=12345
        )
        index.save(index_path)
        write_manifest(manifest, index_path)
        loaded = read_manifest(index_path)
        assert loaded.kb_root == str(tmp_path)
        assert loaded.chunk_count == manifest.chunk_count
        assert loaded.created_at_ms == 12345
        assert loaded.chunking_params == (1000, 200)
        assert [s.path for s in loaded.sources] == [s.path for s in sources]

    def test_missing_manifest_raises(self, tmp_path):
        with pytest.raises(ConfigurationError):
            read_manifest(tmp_path / "index.ldjson")


class TestIngestKb:
    def test_end_to_end_is_deterministic(self, bundled_kb, tmp_path):
        a, b = tmp_path / "a.ldjson", tmp_path / "b.ldjson"
        ingest_kb(bundled_kb, a, mock_embed)
        ingest_kb(bundled_kb, b, mock_embed)
        assert a.read_bytes() == b.read_bytes()
        assert VectorIndex.load(a).dimension == 256

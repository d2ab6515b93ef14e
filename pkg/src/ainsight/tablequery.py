"""A small deterministic query language over CSV tables.

This replaces free-form LLM-generated dataframe code with a closed grammar
the model is instructed to emit, so every tool invocation is parseable,
safe, and reproducible::

    FROM <table> [WHERE <col> <cmp> <lit> {AND <col> <cmp> <lit>}]
                 [GROUP BY <col>] SELECT <fn>(<col>?)

* keywords are case-insensitive; identifiers may be double-quoted to
  include spaces; string literals are single-quoted (no escape syntax,
  so a single quote cannot appear inside a literal);
* comparators: ``=  !=  <  <=  >  >=  contains``; the ordered comparators
  apply to number columns only, ``contains`` (case-sensitive substring)
  to text columns only;
* aggregate functions: ``mean sum count min max distinct_count``;
  ``count`` may omit its column, every other function requires one;
* numbers are plain decimals with optional sign and fraction, no locale
  handling and no exponents.

Missing-value semantics follow common relational practice: a missing cell
fails every comparator, aggregates skip missing cells, ``mean``/``min``/
``max`` over zero eligible cells yield missing, ``sum`` yields 0, and rows
whose GROUP BY cell is missing are left out of grouped output.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field

from .errors import EvaluationError, QueryParseError, TableLoadError

Cell = float | str | None

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=", "contains")
ORDERED_COMPARATORS = ("<", "<=", ">", ">=")
AGGREGATE_FUNCTIONS = ("mean", "sum", "count", "min", "max", "distinct_count")
KEYWORDS = frozenset({"from", "where", "and", "group", "by", "select", "contains"})

_NUMBER_RE = re.compile(r"[+-]?\d+(?:\.\d+)?")
_BARE_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


# ---------------------------------------------------------------------------
# Tables


@dataclass(frozen=True)
class Table:
    """An immutable, loaded CSV table with per-column inferred types."""

    table_id: str
    columns: tuple[tuple[str, str], ...]  # (name, "number" | "text")
    rows: tuple[tuple[Cell, ...], ...]

    def column_index(self, name: str) -> int:
        for i, (col_name, _) in enumerate(self.columns):
            if col_name == name:
                return i
        raise EvaluationError(f"unknown column {name!r} in table {self.table_id!r}")

    def column_type(self, name: str) -> str:
        return self.columns[self.column_index(name)][1]


def _is_number_cell(raw: str) -> bool:
    return _NUMBER_RE.fullmatch(raw) is not None


def load_table(table_id: str, content: str) -> Table:
    """Parse CSV content (first row = header) into a typed :class:`Table`.

    A column is typed number iff every non-empty cell parses as a plain
    decimal; empty cells become missing. Raises :class:`TableLoadError` on
    ragged rows (naming the 1-based data row) or duplicate header names.
    """
    reader = csv.reader(io.StringIO(content))
    try:
        header = next(reader)
    except StopIteration:
        raise TableLoadError(f"table {table_id!r}: no header row") from None
    if len(set(header)) != len(header):
        dupes = sorted({name for name in header if header.count(name) > 1})
        raise TableLoadError(f"table {table_id!r}: duplicate header names {dupes}")
    raw_rows: list[list[str]] = []
    for row_index, row in enumerate(reader, start=1):
        if not row:
            continue  # blank line
        if len(row) != len(header):
            raise TableLoadError(
                f"table {table_id!r}: row {row_index} has {len(row)} cells, "
                f"header has {len(header)}",
                row_index=row_index,
            )
        raw_rows.append(row)

    types = []
    for col in range(len(header)):
        cells = [row[col] for row in raw_rows if row[col] != ""]
        numeric = bool(cells) and all(_is_number_cell(c) for c in cells)
        types.append("number" if numeric else "text")

    rows = tuple(
        tuple(
            None if raw == "" else (float(raw) if types[col] == "number" else raw)
            for col, raw in enumerate(row)
        )
        for row in raw_rows
    )
    return Table(
        table_id=table_id,
        columns=tuple(zip(header, types)),
        rows=rows,
    )


class TableRegistry:
    """Loaded tables keyed by table id; shared by ingest and the tool loop."""

    def __init__(self) -> None:
        self._tables: dict[str, Table] = {}

    def register(self, table: Table) -> None:
        self._tables[table.table_id] = table

    def get(self, table_id: str) -> Table | None:
        return self._tables.get(table_id)

    def ids(self) -> list[str]:
        return sorted(self._tables)

    def __len__(self) -> int:
        return len(self._tables)


# ---------------------------------------------------------------------------
# Query AST


@dataclass(frozen=True)
class Filter:
    column: str
    comparator: str
    literal: float | str


@dataclass(frozen=True)
class Aggregate:
    function: str
    column: str | None = None


@dataclass(frozen=True)
class TableQuery:
    table_id: str
    filters: tuple[Filter, ...] = ()
    group_by: str | None = None
    aggregate: Aggregate = field(default_factory=lambda: Aggregate("count"))


@dataclass(frozen=True)
class QueryResult:
    """Either a single ungrouped value or (group key, value) pairs, key-ascending."""

    value: float | None = None
    groups: tuple[tuple[Cell, float | None], ...] | None = None

    @property
    def grouped(self) -> bool:
        return self.groups is not None


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>[+-]?\d+(?:\.\d+)?)
      | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<qid>"[^"\n]*")
      | (?P<string>'[^'\n]*')
      | (?P<op>!=|<=|>=|[<>=()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | word | qid | string | op | eof
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise QueryParseError(pos, "a token", repr(text[pos]))
        kind = match.lastgroup or ""
        if kind != "ws":
            tokens.append(_Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str) -> QueryParseError:
        tok = self.peek()
        found = "end of input" if tok.kind == "eof" else tok.text
        return QueryParseError(tok.pos, expected, found)

    def expect_keyword(self, keyword: str) -> None:
        tok = self.peek()
        if tok.kind == "word" and tok.text.lower() == keyword:
            self.advance()
            return
        raise self.fail(f"keyword {keyword.upper()}")

    def at_keyword(self, keyword: str) -> bool:
        tok = self.peek()
        return tok.kind == "word" and tok.text.lower() == keyword

    def identifier(self, what: str) -> str:
        tok = self.peek()
        if tok.kind == "word" and tok.text.lower() not in KEYWORDS:
            self.advance()
            return tok.text
        if tok.kind == "qid":
            self.advance()
            return tok.text[1:-1]
        raise self.fail(what)

    def literal(self) -> float | str:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return float(tok.text)
        if tok.kind == "string":
            self.advance()
            return tok.text[1:-1]
        raise self.fail("a number or single-quoted string literal")

    def comparator(self) -> str:
        tok = self.peek()
        if tok.kind == "op" and tok.text in COMPARATORS:
            self.advance()
            return tok.text
        if tok.kind == "word" and tok.text.lower() == "contains":
            self.advance()
            return "contains"
        raise self.fail("a comparator (=, !=, <, <=, >, >= or CONTAINS)")

    def query(self) -> TableQuery:
        self.expect_keyword("from")
        table_id = self.identifier("a table name")
        filters: list[Filter] = []
        if self.at_keyword("where"):
            self.advance()
            while True:
                column = self.identifier("a column name")
                cmp = self.comparator()
                lit = self.literal()
                filters.append(Filter(column, cmp, lit))
                if self.at_keyword("and"):
                    self.advance()
                    continue
                break
        group_by = None
        if self.at_keyword("group"):
            self.advance()
            self.expect_keyword("by")
            group_by = self.identifier("a column name")
        self.expect_keyword("select")
        fn_tok = self.peek()
        if fn_tok.kind != "word" or fn_tok.text.lower() not in AGGREGATE_FUNCTIONS:
            raise self.fail("an aggregate function name (mean, sum, count, min, max, distinct_count)")
        self.advance()
        function = fn_tok.text.lower()
        if not (self.peek().kind == "op" and self.peek().text == "("):
            raise self.fail("'('")
        self.advance()
        column: str | None = None
        if self.peek().kind == "op" and self.peek().text == ")":
            if function != "count":
                raise self.fail("a column name")
            self.advance()
        else:
            column = self.identifier("a column name")
            if not (self.peek().kind == "op" and self.peek().text == ")"):
                raise self.fail("')'")
            self.advance()
        if self.peek().kind != "eof":
            raise self.fail("end of input")
        return TableQuery(
            table_id=table_id,
            filters=tuple(filters),
            group_by=group_by,
            aggregate=Aggregate(function, column),
        )


def parse_query(text: str) -> TableQuery:
    """Parse query text; raises :class:`QueryParseError` on any deviation."""
    return _Parser(_tokenize(text)).query()


def _render_identifier(name: str) -> str:
    if _BARE_ID_RE.fullmatch(name) and name.lower() not in KEYWORDS:
        return name
    if '"' in name or "\n" in name:
        raise EvaluationError(f"identifier {name!r} cannot be rendered in the query grammar")
    return f'"{name}"'


def _render_literal(literal: float | str) -> str:
    if isinstance(literal, str):
        if "'" in literal or "\n" in literal:
            raise EvaluationError(f"string literal {literal!r} cannot be rendered in the query grammar")
        return f"'{literal}'"
    if literal == int(literal) and abs(literal) < 1e15:
        return str(int(literal))
    return repr(literal)


def render_query(query: TableQuery) -> str:
    """Canonical text for an AST; re-parsing it yields an equal AST."""
    parts = [f"FROM {_render_identifier(query.table_id)}"]
    if query.filters:
        rendered = [
            f"{_render_identifier(f.column)} {f.comparator} {_render_literal(f.literal)}"
            for f in query.filters
        ]
        parts.append("WHERE " + " AND ".join(rendered))
    if query.group_by is not None:
        parts.append(f"GROUP BY {_render_identifier(query.group_by)}")
    agg = query.aggregate
    col = "" if agg.column is None else _render_identifier(agg.column)
    parts.append(f"SELECT {agg.function}({col})")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Evaluation


def _check_filter_types(query: TableQuery, table: Table) -> None:
    for f in query.filters:
        col_type = table.column_type(f.column)
        if f.comparator in ORDERED_COMPARATORS and col_type != "number":
            raise EvaluationError(
                f"comparator {f.comparator!r} requires a number column, "
                f"{f.column!r} is text"
            )
        if f.comparator == "contains" and col_type != "text":
            raise EvaluationError(
                f"comparator 'contains' requires a text column, {f.column!r} is number"
            )
        expected = str if col_type == "text" else float
        if not isinstance(f.literal, expected):
            raise EvaluationError(
                f"literal {f.literal!r} does not match the {col_type} column {f.column!r}"
            )


def _passes(row: tuple[Cell, ...], f: Filter, col: int) -> bool:
    cell = row[col]
    if cell is None:
        return False
    if f.comparator == "=":
        return cell == f.literal
    if f.comparator == "!=":
        return cell != f.literal
    if f.comparator == "contains":
        return str(f.literal) in str(cell)
    assert isinstance(cell, float) and isinstance(f.literal, float)
    if f.comparator == "<":
        return cell < f.literal
    if f.comparator == "<=":
        return cell <= f.literal
    if f.comparator == ">":
        return cell > f.literal
    return cell >= f.literal


def _aggregate(rows: list[tuple[Cell, ...]], agg: Aggregate, col: int | None) -> float | None:
    if agg.function == "count":
        if col is None:
            return float(len(rows))
        return float(sum(1 for row in rows if row[col] is not None))
    assert col is not None
    cells = [row[col] for row in rows if row[col] is not None]
    if agg.function == "distinct_count":
        return float(len(set(cells)))
    if agg.function == "sum":
        return float(sum(c for c in cells if isinstance(c, float)))
    if not cells:
        return None
    numbers = [c for c in cells if isinstance(c, float)]
    if agg.function == "mean":
        return sum(numbers) / len(numbers)
    if agg.function == "min":
        return min(numbers)
    return max(numbers)


def evaluate(query: TableQuery, table: Table) -> QueryResult:
    """Run a parsed query against a loaded table.

    Raises :class:`EvaluationError` for unknown columns or type-rule
    violations; never mutates the table.
    """
    if query.table_id != table.table_id:
        raise EvaluationError(
            f"query targets table {query.table_id!r}, got {table.table_id!r}"
        )
    _check_filter_types(query, table)

    agg = query.aggregate
    agg_col: int | None = None
    if agg.column is not None:
        agg_col = table.column_index(agg.column)
        col_type = table.columns[agg_col][1]
        # QueryResult values are numbers or missing, so every value-producing
        # aggregate needs a number column; distinct_count/count merely count.
        if agg.function in ("mean", "sum", "min", "max") and col_type != "number":
            raise EvaluationError(
                f"aggregate {agg.function!r} requires a number column, {agg.column!r} is text"
            )
    elif agg.function != "count":
        raise EvaluationError(f"aggregate {agg.function!r} requires a column")

    filter_cols = [table.column_index(f.column) for f in query.filters]
    passing = [
        row
        for row in table.rows
        if all(_passes(row, f, c) for f, c in zip(query.filters, filter_cols))
    ]

    if query.group_by is None:
        return QueryResult(value=_aggregate(passing, agg, agg_col))

    group_col = table.column_index(query.group_by)
    groups: dict[Cell, list[tuple[Cell, ...]]] = {}
    for row in passing:
        key = row[group_col]
        if key is None:
            continue
        groups.setdefault(key, []).append(row)
    ordered = sorted(groups)  # keys share the column's single type
    return QueryResult(
        groups=tuple((key, _aggregate(groups[key], agg, agg_col)) for key in ordered)
    )


def format_result(result: QueryResult) -> str:
    """Stable one-line text for tool-loop context (display rounding stays in the UI)."""

    def fmt(value: Cell) -> str:
        if value is None:
            return "missing"
        if isinstance(value, float) and value == int(value) and abs(value) < 1e15:
            return str(int(value))
        return str(value)

    if result.groups is None:
        return fmt(result.value)
    return "; ".join(f"{fmt(key)}={fmt(value)}" for key, value in result.groups)

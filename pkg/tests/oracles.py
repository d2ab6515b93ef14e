"""Independent reference implementations used to check engine results.

The pandas evaluator re-implements the table-query semantics from the
written contract (missing fails every comparator, aggregates skip missing,
empty mean/min/max are missing, empty sum is 0, missing group keys drop)
without sharing any code with the engine.
"""

from __future__ import annotations

import random
import string

import pandas as pd

from ainsight.tablequery import (
    AGGREGATE_FUNCTIONS,
    Aggregate,
    Filter,
    QueryResult,
    Table,
    TableQuery,
)


def table_to_frame(table: Table) -> pd.DataFrame:
    data = {}
    for i, (name, col_type) in enumerate(table.columns):
        cells = [row[i] for row in table.rows]
        if col_type == "number":
            data[name] = pd.array(
                [float("nan") if c is None else c for c in cells], dtype="float64"
            )
        else:
            data[name] = pd.array(cells, dtype="object")
    return pd.DataFrame(data, columns=[name for name, _ in table.columns])


def pandas_evaluate(query: TableQuery, table: Table) -> QueryResult:
    df = table_to_frame(table)

    for f in query.filters:
        col = df[f.column]
        mask = col.notna()
        if f.comparator == "=":
            mask &= col == f.literal
        elif f.comparator == "!=":
            mask &= col != f.literal
        elif f.comparator == "contains":
            mask &= col.map(lambda c: isinstance(c, str) and f.literal in c)
        elif f.comparator == "<":
            mask &= col < f.literal
        elif f.comparator == "<=":
            mask &= col <= f.literal
        elif f.comparator == ">":
            mask &= col > f.literal
        elif f.comparator == ">=":
            mask &= col >= f.literal
        else:
            raise AssertionError(f.comparator)
        df = df[mask.fillna(False)]

    def aggregate(frame: pd.DataFrame) -> float | None:
        fn = query.aggregate.function
        column = query.aggregate.column
        if fn == "count":
            if column is None:
                return float(len(frame))
            return float(frame[column].notna().sum())
        series = frame[column]
        if fn == "distinct_count":
            return float(series.dropna().nunique())
        if fn == "sum":
            return float(series.sum())
        values = series.dropna()
        if len(values) == 0:
            return None
        if fn == "mean":
            return float(values.mean())
        if fn == "min":
            return float(values.min())
        return float(values.max())

    if query.group_by is None:
        return QueryResult(value=aggregate(df))

    keyed = df[df[query.group_by].notna()]
    groups = []
    for key, sub in keyed.groupby(query.group_by, sort=True):
        groups.append((key if isinstance(key, str) else float(key), aggregate(sub)))
    return QueryResult(groups=tuple(groups))


def values_equal(a: float | None, b: float | None, rel: float = 1e-9) -> bool:
    if a is None or b is None:
        return a is b
    if a == b:
        return True
    return abs(a - b) <= rel * max(abs(a), abs(b))


def results_equal(a: QueryResult, b: QueryResult, rel: float = 1e-9) -> bool:
    if (a.groups is None) != (b.groups is None):
        return False
    if a.groups is None:
        return values_equal(a.value, b.value, rel)
    if len(a.groups) != len(b.groups):
        return False
    return all(
        ka == kb and values_equal(va, vb, rel)
        for (ka, va), (kb, vb) in zip(a.groups, b.groups)
    )


# -- shared oracle case suite -------------------------------------------------

SURVEY_CSV = "Age,Province\n20,Ontario\n30,Quebec\n40,Alberta\n"

PEOPLE_CSV = (
    "Name,Age,City,Score\n"
    "Ada,34,London,91.5\n"
    "Ben,28,Toronto,77\n"
    "Cleo,45,London,88\n"
    "Dev,,Ottawa,64.25\n"
    "Eve,51,Toronto,\n"
    "Flo,28,,70\n"
    "Gus,39,London,\n"
    "Hal,28,Toronto,82.5\n"
)

# (table_id, csv_text, query_text) checked against the pandas evaluator
ORACLE_CASES: list[tuple[str, str, str]] = [
    ("survey", SURVEY_CSV, "FROM survey SELECT mean(Age)"),
    ("survey", SURVEY_CSV, "FROM survey SELECT sum(Age)"),
    ("survey", SURVEY_CSV, "FROM survey SELECT count()"),
    ("survey", SURVEY_CSV, "FROM survey WHERE Age > 25 SELECT count()"),
    ("survey", SURVEY_CSV, "FROM survey WHERE Province = 'Quebec' SELECT mean(Age)"),
    ("survey", SURVEY_CSV, "FROM survey GROUP BY Province SELECT mean(Age)"),
    ("people", PEOPLE_CSV, "FROM people SELECT mean(Age)"),
    ("people", PEOPLE_CSV, "FROM people SELECT count(Age)"),
    ("people", PEOPLE_CSV, "FROM people SELECT count(Score)"),
    ("people", PEOPLE_CSV, "FROM people SELECT distinct_count(Age)"),
    ("people", PEOPLE_CSV, "FROM people SELECT distinct_count(City)"),
    ("people", PEOPLE_CSV, "FROM people SELECT min(Score)"),
    ("people", PEOPLE_CSV, "FROM people SELECT max(Score)"),
    ("people", PEOPLE_CSV, "FROM people WHERE Age >= 28 AND Age < 45 SELECT sum(Score)"),
    ("people", PEOPLE_CSV, "FROM people WHERE City = 'London' SELECT mean(Score)"),
    ("people", PEOPLE_CSV, "FROM people WHERE City != 'Toronto' SELECT count()"),
    ("people", PEOPLE_CSV, "FROM people WHERE Name contains 'e' SELECT count()"),
    ("people", PEOPLE_CSV, "FROM people WHERE City contains 'on' SELECT mean(Age)"),
    ("people", PEOPLE_CSV, "FROM people GROUP BY City SELECT count()"),
    ("people", PEOPLE_CSV, "FROM people GROUP BY City SELECT mean(Score)"),
    ("people", PEOPLE_CSV, "FROM people GROUP BY Age SELECT count()"),
    ("people", PEOPLE_CSV, "FROM people WHERE Score > 100 SELECT mean(Score)"),
    ("people", PEOPLE_CSV, "FROM people WHERE Score > 100 SELECT sum(Score)"),
    ("people", PEOPLE_CSV, "FROM people WHERE Age = 28 GROUP BY City SELECT max(Score)"),
]


# -- deterministic random generation (counted loops, no hypothesis) -----------

_ID_CHARS = string.ascii_lowercase + "_"


def random_identifier(rng: random.Random) -> str:
    if rng.random() < 0.15:
        # force the quoted form
        return "".join(rng.choice(_ID_CHARS + " -") for _ in range(rng.randint(1, 8)))
    first = rng.choice(string.ascii_letters + "_")
    rest = "".join(
        rng.choice(string.ascii_letters + string.digits + "_")
        for _ in range(rng.randint(0, 7))
    )
    return first + rest


def random_literal(rng: random.Random) -> float | str:
    if rng.random() < 0.5:
        value = rng.choice(
            [float(rng.randint(-1000, 1000)), round(rng.uniform(-100, 100), 3)]
        )
        return value
    return "".join(
        rng.choice(string.ascii_letters + string.digits + " .,-")
        for _ in range(rng.randint(0, 10))
    )


def random_query_ast(rng: random.Random) -> TableQuery:
    filters = tuple(
        Filter(
            column=random_identifier(rng),
            comparator=rng.choice(("=", "!=", "<", "<=", ">", ">=", "contains")),
            literal=random_literal(rng),
        )
        for _ in range(rng.randint(0, 3))
    )
    function = rng.choice(AGGREGATE_FUNCTIONS)
    column = None if function == "count" and rng.random() < 0.5 else random_identifier(rng)
    return TableQuery(
        table_id=random_identifier(rng),
        filters=filters,
        group_by=random_identifier(rng) if rng.random() < 0.4 else None,
        aggregate=Aggregate(function, column),
    )


def random_fuzz_text(rng: random.Random, max_len: int = 1000) -> str:
    """Arbitrary junk weighted toward query-looking text."""
    roll = rng.random()
    if roll < 0.3:
        pool = "FROM WHERE AND GROUP BY SELECT mean sum count ( ) = != < > <= >= ' \" 0123456789 abc _"
        words = pool.split(" ")
        return " ".join(rng.choice(words) for _ in range(rng.randint(0, 40)))[:max_len]
    if roll < 0.6:
        alphabet = string.printable
        return "".join(
            rng.choice(alphabet) for _ in range(rng.randint(0, max_len))
        )
    # mutate a plausible query
    base = (
        "FROM people WHERE Age >= 28 AND City contains 'on' "
        "GROUP BY City SELECT mean(Score)"
    )
    chars = list(base)
    for _ in range(rng.randint(0, 12)):
        action = rng.random()
        pos = rng.randrange(len(chars)) if chars else 0
        if action < 0.4 and chars:
            del chars[pos]
        elif action < 0.8:
            chars.insert(pos, rng.choice(string.printable))
        elif chars:
            chars[pos] = rng.choice(string.printable)
    return "".join(chars)[:max_len]


def random_table(rng: random.Random, table_id: str = "t") -> Table:
    """A typed table with missing cells, built through the real loader."""
    from ainsight.tablequery import load_table

    n_rows = rng.randint(0, 25)
    header = ["num_a", "num_b", "txt_a", "txt_b"]
    lines = [",".join(header)]
    for _ in range(n_rows):
        cells = []
        for col in range(4):
            if rng.random() < 0.15:
                cells.append("")
            elif col < 2:
                cells.append(str(rng.randint(-50, 50)))
            else:
                cells.append(rng.choice(["red", "green", "blue", "teal", "red x"]))
        lines.append(",".join(cells))
    return load_table(table_id, "\n".join(lines) + "\n")


def random_valid_query(rng: random.Random, table: Table) -> TableQuery:
    """A query that satisfies the type rules for *table*."""
    number_cols = [name for name, t in table.columns if t == "number"]
    text_cols = [name for name, t in table.columns if t == "text"]

    def one_filter() -> Filter:
        if number_cols and (not text_cols or rng.random() < 0.5):
            column = rng.choice(number_cols)
            comparator = rng.choice(("=", "!=", "<", "<=", ">", ">="))
            return Filter(column, comparator, float(rng.randint(-50, 50)))
        column = rng.choice(text_cols)
        comparator = rng.choice(("=", "!=", "contains"))
        return Filter(column, comparator, rng.choice(["red", "green", "blue", "e"]))

    filters = tuple(one_filter() for _ in range(rng.randint(0, 3)))
    group_by = (
        rng.choice([name for name, _ in table.columns]) if rng.random() < 0.4 else None
    )
    allowed = (
        AGGREGATE_FUNCTIONS
        if number_cols
        else ("count", "distinct_count")
    )
    function = rng.choice(allowed)
    if function in ("mean", "sum", "min", "max"):
        column = rng.choice(number_cols)
    elif function == "count":
        column = rng.choice([None, *[name for name, _ in table.columns]])
    else:
        column = rng.choice([name for name, _ in table.columns])
    return TableQuery(
        table_id=table.table_id,
        filters=filters,
        group_by=group_by,
        aggregate=Aggregate(function, column),
    )

"""Shared value, schema and result-set types used by every engine and the wire layer.

Values are plain Python objects: Int64 -> int, Float64 -> float, Text -> str,
Null -> None. bool is not a value kind and is rejected everywhere.

The total order used for ORDER BY and key sorting puts Null first, then the
numeric band (Int64 and Float64 compared numerically, exact numeric ties broken
Int64-first), then Text (code point order, which equals UTF-8 byte order).
Predicate operators never match Null: any comparison involving Null is false.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

from .errors import CoerceError, SchemaMismatch, SnapshotError


class ValueKind(str, Enum):
    INT64 = "int64"
    FLOAT64 = "float64"
    TEXT = "text"

    def __str__(self):
        return self.value


_KIND_BY_NAME = {k.value: k for k in ValueKind}

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
MAX_IDENT_LEN = 64

# Decimal / scientific notation only; float() alone would accept "inf"/"nan".
_NUMERIC_TEXT_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")
_INT_TEXT_RE = re.compile(r"[+-]?\d+\Z")


def normalize_ident(name: str) -> str:
    """Validate the identifier grammar and fold to lowercase."""
    if not isinstance(name, str) or not IDENT_RE.match(name) or len(name) > MAX_IDENT_LEN:
        raise SchemaMismatch(f"invalid identifier: {name!r}")
    return name.lower()


def kind_of(v) -> Optional[ValueKind]:
    """Kind of a value, or None for Null. Rejects anything outside the model."""
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise SchemaMismatch(f"unsupported value: {v!r}")
    if isinstance(v, int):
        return ValueKind.INT64
    if isinstance(v, float):
        return ValueKind.FLOAT64
    return ValueKind.TEXT


def conforms(v, kind: ValueKind) -> bool:
    """True when v is Null or matches the declared kind."""
    k = kind_of(v)
    return k is None or k == kind


def sort_key(v):
    """Key embedding the total order; usable with sorted()."""
    if v is None:
        return (0,)
    if isinstance(v, str):
        return (2, v)
    # numeric band: value first, then Int64 (0) before Float64 (1) on exact ties
    return (1, v, 0 if isinstance(v, int) else 1)


def compare(a, b) -> int:
    """Total-order comparison: -1 less, 0 equal, 1 greater."""
    ka, kb = sort_key(a), sort_key(b)
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


def coerce(v, target: ValueKind):
    """Convert v to the target kind; Null passes through untouched."""
    if v is None:
        return None
    kind = kind_of(v)
    if kind == target:
        return v
    if target == ValueKind.TEXT:
        return render_value(v)
    if target == ValueKind.INT64:
        if kind == ValueKind.FLOAT64:
            if not math.isfinite(v):
                raise CoerceError(f"cannot truncate non-finite {v!r} to int64")
            return int(v)  # truncates toward zero
        if _INT_TEXT_RE.match(v):
            return int(v, 10)
        raise CoerceError(f"text {v!r} does not parse as int64")
    if target == ValueKind.FLOAT64:
        if kind == ValueKind.INT64:
            return float(v)
        if _NUMERIC_TEXT_RE.match(v):
            f = float(v)
            if math.isfinite(f):
                return f
        raise CoerceError(f"text {v!r} does not parse as float64")
    raise CoerceError(f"unknown target kind {target!r}")


def render_value(v) -> str:
    """Canonical text rendering: ints plain, floats shortest round-trip."""
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class Schema:
    """Ordered list of (name, kind) fields; names unique case-insensitively."""

    fields: Tuple[Tuple[str, ValueKind], ...]

    def __init__(self, fields: Iterable[Tuple[str, ValueKind]]):
        normalized = []
        seen = set()
        for name, kind in fields:
            name = normalize_ident(name)
            if name in seen:
                raise SchemaMismatch(f"duplicate field name: {name!r}")
            seen.add(name)
            if not isinstance(kind, ValueKind):
                kind = _parse_kind(kind)
            normalized.append((name, kind))
        object.__setattr__(self, "fields", tuple(normalized))

    @property
    def names(self) -> List[str]:
        return [n for n, _ in self.fields]

    @property
    def kinds(self) -> List[ValueKind]:
        return [k for _, k in self.fields]

    def arity(self) -> int:
        return len(self.fields)

    def index(self, name: str) -> int:
        name = name.lower()
        for i, (n, _) in enumerate(self.fields):
            if n == name:
                return i
        raise SchemaMismatch(f"no field named {name!r}")

    def has(self, name: str) -> bool:
        return name.lower() in set(self.names)

    def check_row(self, row: Sequence) -> Tuple:
        if len(row) != len(self.fields):
            raise SchemaMismatch(
                f"row arity {len(row)} does not match schema arity {len(self.fields)}"
            )
        for v, (name, kind) in zip(row, self.fields):
            if not conforms(v, kind):
                raise SchemaMismatch(f"value {v!r} does not conform to {name}:{kind}")
        return tuple(row)

    def describe(self) -> str:
        return ",".join(f"{n}:{k}" for n, k in self.fields)

    @classmethod
    def parse(cls, text: str) -> "Schema":
        if text.strip() == "":
            return cls([])
        fields = []
        for part in text.split(","):
            name, _, kind = part.partition(":")
            fields.append((name.strip(), _parse_kind(kind.strip())))
        return cls(fields)


def _parse_kind(text: str) -> ValueKind:
    try:
        return _KIND_BY_NAME[text.lower()]
    except KeyError:
        raise SchemaMismatch(f"unknown value kind: {text!r}") from None


def deduped_schema(fields: Iterable[Tuple[str, ValueKind]]) -> Schema:
    """Schema builder that suffixes _2, _3... onto colliding field names."""
    out, seen = [], set()
    for name, kind in fields:
        candidate, n = name, 2
        while candidate in seen:
            candidate = f"{name}_{n}"
            n += 1
        seen.add(candidate)
        out.append((candidate, kind))
    return Schema(out)


@dataclass(frozen=True)
class ResultSet:
    """Schema plus an ordered list of conforming tuples."""

    schema: Schema
    rows: Tuple[Tuple, ...] = field(default_factory=tuple)

    def __init__(self, schema: Schema, rows: Iterable[Sequence] = ()):
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "rows", tuple(schema.check_row(r) for r in rows))

    def __len__(self):
        return len(self.rows)


# ---------------------------------------------------------------------------
# CSV wire format: LF endings, header always present, RFC-4180 quoting for
# Text fields. Null renders as an empty unquoted field; an empty Text string
# renders as "" so the round trip stays exact.
# ---------------------------------------------------------------------------

_NEEDS_QUOTE = re.compile(r'[",\r\n]')


def _render_field(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        if v == "" or _NEEDS_QUOTE.search(v):
            return '"' + v.replace('"', '""') + '"'
        return v
    return render_value(v)


def render_csv(rs: ResultSet) -> str:
    out = [",".join(rs.schema.names)]
    for row in rs.rows:
        out.append(",".join(_render_field(v) for v in row))
    return "\n".join(out) + "\n"


def _split_records(text: str):
    """Yield records as lists of (raw_field, was_quoted), honoring quotes."""
    record, fld, quoted = [], [], False
    i, n = 0, len(text)
    in_quotes = False
    while i < n:
        c = text[i]
        if in_quotes:
            if c == '"':
                if i + 1 < n and text[i + 1] == '"':
                    fld.append('"')
                    i += 2
                    continue
                in_quotes = False
                i += 1
                continue
            fld.append(c)
            i += 1
            continue
        if c == '"':
            if fld:
                raise SnapshotError("quote inside unquoted field")
            in_quotes = True
            quoted = True
            i += 1
            continue
        if c == ",":
            record.append(("".join(fld), quoted))
            fld, quoted = [], False
            i += 1
            continue
        if c == "\n":
            record.append(("".join(fld), quoted))
            yield record
            record, fld, quoted = [], [], False
            i += 1
            continue
        fld.append(c)
        i += 1
    if in_quotes:
        raise SnapshotError("unterminated quoted field")
    if fld or quoted or record:
        record.append(("".join(fld), quoted))
        yield record


def _decode_field(raw: str, quoted: bool, kind: ValueKind):
    if kind == ValueKind.TEXT:
        if raw == "" and not quoted:
            return None
        return raw
    if raw == "":
        return None
    if kind == ValueKind.INT64:
        return int(raw, 10)
    return float(raw)


def parse_csv(text: str, schema: Schema) -> List[Tuple]:
    """Parse render_csv output back into rows. Header must match the schema."""
    records = list(_split_records(text))
    if not records:
        raise SnapshotError("missing CSV header")
    header = [r for r, _ in records[0]]
    if header != schema.names:
        raise SnapshotError(f"CSV header {header!r} does not match schema {schema.names!r}")
    rows = []
    for rec in records[1:]:
        if len(rec) != schema.arity():
            raise SnapshotError(f"CSV record arity {len(rec)} != schema arity {schema.arity()}")
        rows.append(
            tuple(
                _decode_field(raw, quoted, kind)
                for (raw, quoted), kind in zip(rec, schema.kinds)
            )
        )
    return rows

"""Cross-model cast layer: move a query result into any island's data model.

Every engine already flattens results to the canonical tuple form (dims
first, then attributes), which doubles as the relational representation, so
all nine (source island, destination island) pairs reduce to one of three
destination writers over a ResultSet. Same-island engine-to-engine moves
copy the object representation verbatim instead, preserving snapshot bytes.

Destination rules:
  - relational: spec field order (star keeps the source schema verbatim)
  - array: spec dims become coordinates (Int64, non-Null, no duplicates);
    the box per dim is [min, max] of observed coordinates ([0, 0] when empty)
  - text: row key renders spec.row_col, one entry per (row, value column)
    with colqual = column name and one shared timestamp for the whole
    migration (so a retry with latest_only semantics is idempotent)
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Tuple

from .engines import ARRAY, RELATIONAL, TEXT
from .engines.text import KV_SCHEMA
from .errors import (
    DuplicateCoordinate,
    KindMismatch,
    NullCoordinate,
    SpecMismatch,
)
from .lang.ast import MappingSpec
from .model import ResultSet, Schema, ValueKind, render_value

# Every (source island, dest island) pair routes through the flattened
# canonical form into one destination writer; the matrix is total.
CAST_MATRIX = {
    (src, dest): f"flatten->{dest}"
    for src in (RELATIONAL, ARRAY, TEXT)
    for dest in (RELATIONAL, ARRAY, TEXT)
}

# placeholder box for plan-time array binding; the real box is data-driven
PLAN_BOUND = 2**62


@dataclass(frozen=True)
class ResolvedMapping:
    """A MappingSpec checked against a concrete source schema."""

    dest_island: str
    field_idx: Tuple[int, ...] = ()  # relational: source indexes in dest order
    dim_idx: Tuple[int, ...] = ()  # array
    attr_idx: Tuple[int, ...] = ()  # array
    row_idx: int = -1  # text
    value_idx: Tuple[int, ...] = ()  # text
    src_schema: Schema = Schema([])

    def flattened_schema(self) -> Schema:
        """Schema of the destination object's canonical table form."""
        f = self.src_schema.fields
        if self.dest_island == RELATIONAL:
            return Schema([f[i] for i in self.field_idx])
        if self.dest_island == ARRAY:
            return Schema([f[i] for i in self.dim_idx] + [f[i] for i in self.attr_idx])
        return KV_SCHEMA

    def array_meta(self):
        """(dims-with-placeholder-bounds, attrs) for plan-time binding."""
        f = self.src_schema.fields
        dims = [(f[i][0], -PLAN_BOUND, PLAN_BOUND) for i in self.dim_idx]
        attrs = Schema([f[i] for i in self.attr_idx])
        return dims, attrs


def resolve_mapping(spec: MappingSpec, src: Schema, dest_island: str) -> ResolvedMapping:
    """Validate a mapping spec against the source schema; SpecMismatch on any gap."""

    def index_of(name: str) -> int:
        if not src.has(name):
            raise SpecMismatch(f"cast spec references {name!r}, not in source columns {src.names}")
        return src.index(name)

    if dest_island == RELATIONAL:
        if spec.star:
            idx = tuple(range(src.arity()))
        else:
            idx = tuple(index_of(n) for n in spec.primary)
        if len(set(idx)) != len(idx):
            raise SpecMismatch("cast spec repeats a column")
        return ResolvedMapping(RELATIONAL, field_idx=idx, src_schema=src)

    if dest_island == ARRAY:
        if spec.star:
            # canonical derivation: maximal leading run of Int64 columns are dims
            dims = []
            for i, (_, kind) in enumerate(src.fields):
                if kind != ValueKind.INT64:
                    break
                dims.append(i)
            attrs = [i for i in range(src.arity()) if i not in dims]
        else:
            dims = [index_of(n) for n in spec.primary]
            attrs = [index_of(n) for n in spec.secondary]
        if not dims:
            raise SpecMismatch("array cast needs at least one Int64 dimension column")
        if not attrs:
            raise SpecMismatch("array cast needs at least one attribute column")
        for i in dims:
            name, kind = src.fields[i]
            if kind != ValueKind.INT64:
                raise SpecMismatch(f"array dimension column {name!r} must be int64, is {kind}")
        if set(dims) & set(attrs):
            raise SpecMismatch("a column cannot be both a dimension and an attribute")
        if len(set(dims)) != len(dims) or len(set(attrs)) != len(attrs):
            raise SpecMismatch("cast spec repeats a column")
        return ResolvedMapping(ARRAY, dim_idx=tuple(dims), attr_idx=tuple(attrs), src_schema=src)

    if dest_island == TEXT:
        if spec.star:
            if src.arity() < 2:
                raise SpecMismatch("text cast needs a row column plus at least one value column")
            row_idx, values = 0, tuple(range(1, src.arity()))
        else:
            row_idx = index_of(spec.primary[0])
            values = tuple(index_of(n) for n in spec.secondary)
        if not values:
            raise SpecMismatch("text cast needs at least one value column")
        if len(set(values)) != len(values):
            raise SpecMismatch("cast spec repeats a column")
        return ResolvedMapping(TEXT, row_idx=row_idx, value_idx=values, src_schema=src)

    raise SpecMismatch(f"unknown destination island {dest_island!r}")


def migrate(
    src: ResultSet,
    dest_island: str,
    spec: MappingSpec,
    dest_engine,
    dest_name: str,
    source_label: str,
    mapping: Optional[ResolvedMapping] = None,
) -> int:
    """Materialize src on dest_engine under dest_name; returns items written."""
    if dest_engine.kind != dest_island:
        raise KindMismatch(
            f"cannot migrate a {dest_island} island object onto a {dest_engine.kind} engine"
        )
    m = mapping or resolve_mapping(spec, src.schema, dest_island)

    if dest_island == RELATIONAL:
        schema = m.flattened_schema()
        rows = [tuple(row[i] for i in m.field_idx) for row in src.rows]
        dest_engine.create_table(dest_name, schema)
        try:
            dest_engine.insert(dest_name, rows)
        except Exception:
            dest_engine.drop_object(dest_name)
            raise
        return len(rows)

    if dest_island == ARRAY:
        fields = m.src_schema.fields
        cells = {}
        for row in src.rows:
            coords = []
            for i in m.dim_idx:
                v = row[i]
                if v is None:
                    raise NullCoordinate(f"Null in dimension column {fields[i][0]!r}")
                coords.append(v)
            coords = tuple(coords)
            if coords in cells:
                raise DuplicateCoordinate(f"two source rows map to coordinate {coords}")
            cells[coords] = tuple(row[i] for i in m.attr_idx)
        if cells:
            boxes = [
                (fields[i][0], min(c[d] for c in cells), max(c[d] for c in cells))
                for d, i in enumerate(m.dim_idx)
            ]
        else:
            boxes = [(fields[i][0], 0, 0) for i in m.dim_idx]
        attrs = Schema([fields[i] for i in m.attr_idx])
        dest_engine.create_array(dest_name, boxes, attrs)
        try:
            dest_engine.put_cells(dest_name, list(cells.items()))
        except Exception:
            dest_engine.drop_object(dest_name)
            raise
        return len(cells)

    # text: one shared timestamp for the whole migration
    ts = int(time.time() * 1000)
    fields = m.src_schema.fields
    entries = []
    for row in src.rows:
        rowkey = render_value(row[m.row_idx])
        for i in m.value_idx:
            entries.append((rowkey, source_label, fields[i][0], ts, render_value(row[i])))
    dest_engine.create_kv(dest_name)
    try:
        dest_engine.put(dest_name, entries)
    except Exception:
        dest_engine.drop_object(dest_name)
        raise
    return len(entries)


def copy_same_island(src_engine, object_name: str, dest_engine, dest_name: str):
    """Engine-to-engine move of one object; content is copied verbatim."""
    if src_engine.kind != dest_engine.kind:
        raise KindMismatch(
            f"cannot copy a {src_engine.kind} object onto a {dest_engine.kind} engine"
        )
    state = src_engine.export_object(object_name)
    dest_engine.import_object(dest_name, state)

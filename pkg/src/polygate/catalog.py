"""Middleware metadata store, hosted inside a designated relational engine.

All catalog state lives in three reserved tables (`__bd_engines`,
`__bd_objects`, `__bd_islands`) readable through the engine's ordinary query
path; the Catalog object keeps no private storage beyond id high-water marks.
Mutations serialize through a single writer lock and rewrite table contents
atomically; reads are plain snapshot scans.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .engines import ENGINE_KINDS, TEMP_PREFIX
from .engines import relational as rel
from .errors import (
    DuplicateObject,
    IslandKindMismatch,
    NoSuchEngine,
    NoSuchObject,
    SchemaMismatch,
)
from .model import Schema, ValueKind, normalize_ident

RESERVED_PREFIX = "__bd"

ENGINES_TABLE = "__bd_engines"
OBJECTS_TABLE = "__bd_objects"
ISLANDS_TABLE = "__bd_islands"

ENGINES_SCHEMA = Schema(
    [
        ("eid", ValueKind.INT64),
        ("name", ValueKind.TEXT),
        ("kind", ValueKind.TEXT),
        ("address", ValueKind.TEXT),
        ("status", ValueKind.TEXT),
    ]
)
OBJECTS_SCHEMA = Schema(
    [
        ("oid", ValueKind.INT64),
        ("name", ValueKind.TEXT),
        ("fields", ValueKind.TEXT),
        ("engine_id", ValueKind.INT64),
        ("island", ValueKind.TEXT),
        ("is_temp", ValueKind.INT64),
    ]
)
ISLANDS_SCHEMA = Schema(
    [("iid", ValueKind.INT64), ("scope_name", ValueKind.TEXT), ("kind", ValueKind.TEXT)]
)

ISLAND_ROWS = [
    (1, "bdrel", "relational"),
    (2, "bdarray", "array"),
    (3, "bdtext", "text"),
]


@dataclass(frozen=True)
class EngineEntry:
    eid: int
    name: str
    kind: str
    address: str
    status: str


@dataclass(frozen=True)
class ObjectEntry:
    oid: int
    name: str
    fields: str
    engine_id: int
    island: str
    is_temp: bool


class Catalog:
    """Catalog over a relational engine (or an availability-gated handle to one)."""

    def __init__(self, engine):
        self.engine = engine
        self._writer = threading.Lock()
        self._next_eid = 1
        self._next_oid = 1

    # -- bootstrap -----------------------------------------------------------

    def bootstrap(self):
        """Create reserved tables and the three fixed island rows; idempotent."""
        with self._writer:
            for table, schema in (
                (ENGINES_TABLE, ENGINES_SCHEMA),
                (OBJECTS_TABLE, OBJECTS_SCHEMA),
                (ISLANDS_TABLE, ISLANDS_SCHEMA),
            ):
                if not self.engine.has_object(table):
                    self.engine.create_table(table, schema)
            if not self._rows(ISLANDS_TABLE):
                self.engine.insert(ISLANDS_TABLE, ISLAND_ROWS)
            self._next_eid = 1 + max((r[0] for r in self._rows(ENGINES_TABLE)), default=0)
            self._next_oid = 1 + max((r[0] for r in self._rows(OBJECTS_TABLE)), default=0)

    # -- reads ----------------------------------------------------------------

    def _rows(self, table: str) -> List[Tuple]:
        return list(self.engine.execute(rel.Scan(table)).rows)

    def list_engines(self) -> List[EngineEntry]:
        return [EngineEntry(*r) for r in self._rows(ENGINES_TABLE)]

    def list_objects(self, include_temp: bool = True) -> List[ObjectEntry]:
        out = [self._object_entry(r) for r in self._rows(OBJECTS_TABLE)]
        if not include_temp:
            out = [o for o in out if not o.is_temp]
        return out

    def list_islands(self) -> List[Tuple]:
        return self._rows(ISLANDS_TABLE)

    def get_engine(self, name_or_eid) -> EngineEntry:
        for e in self.list_engines():
            if e.name == name_or_eid or e.eid == name_or_eid:
                return e
        raise NoSuchEngine(f"no engine {name_or_eid!r} in catalog")

    def find_object(self, name: str) -> ObjectEntry:
        name = name.lower()
        for o in self.list_objects():
            if o.name == name:
                return o
        raise NoSuchObject(f"no object {name!r} in catalog")

    def resolve(self, name: str) -> Tuple[ObjectEntry, EngineEntry]:
        obj = self.find_object(name)
        return obj, self.get_engine(obj.engine_id)

    @staticmethod
    def _object_entry(row) -> ObjectEntry:
        return ObjectEntry(row[0], row[1], row[2], row[3], row[4], bool(row[5]))

    # -- writes ----------------------------------------------------------------

    def register_engine(self, name: str, kind: str, address: str) -> int:
        name = normalize_ident(name)
        if kind not in ENGINE_KINDS:
            raise SchemaMismatch(f"unknown engine kind {kind!r}")
        with self._writer:
            for e in self.list_engines():
                if e.name == name:
                    raise DuplicateObject(f"engine {name!r} already registered")
            eid = self._next_eid
            self._next_eid += 1
            self.engine.insert(ENGINES_TABLE, [(eid, name, kind, address, "up")])
            return eid

    def ensure_engine(self, name: str, kind: str, address: str) -> int:
        """register_engine that tolerates an existing row; kind stays immutable."""
        name = normalize_ident(name)
        with self._writer:
            for e in self.list_engines():
                if e.name == name:
                    if e.kind != kind:
                        raise IslandKindMismatch(
                            f"engine {name!r} is registered as {e.kind}, cannot become {kind}"
                        )
                    self._rewrite_engine(e.eid, address=address, status="up")
                    return e.eid
        return self.register_engine(name, kind, address)

    def set_engine_status(self, name: str, status: str):
        if status not in ("up", "down"):
            raise SchemaMismatch(f"bad engine status {status!r}")
        with self._writer:
            e = self.get_engine(normalize_ident(name))
            self._rewrite_engine(e.eid, status=status)

    def _rewrite_engine(self, eid: int, address: Optional[str] = None, status: Optional[str] = None):
        rows = []
        for r in self._rows(ENGINES_TABLE):
            if r[0] == eid:
                r = (
                    r[0],
                    r[1],
                    r[2],
                    address if address is not None else r[3],
                    status if status is not None else r[4],
                )
            rows.append(r)
        self.engine.replace_rows(ENGINES_TABLE, rows)

    def register_object(
        self, name: str, fields: str, engine, island: str, is_temp: bool = False
    ) -> int:
        """engine may be an eid or an engine name; island must match its kind."""
        name = normalize_ident(name)
        if island not in ENGINE_KINDS:
            raise SchemaMismatch(f"unknown island {island!r}")
        if name.startswith(RESERVED_PREFIX) and not (is_temp and name.startswith(TEMP_PREFIX)):
            raise SchemaMismatch(f"object name {name!r} uses the reserved catalog prefix")
        with self._writer:
            eng = self.get_engine(engine if isinstance(engine, int) else normalize_ident(engine))
            if eng.kind != island:
                raise IslandKindMismatch(
                    f"{eng.kind} engine {eng.name!r} cannot host a {island} island object"
                )
            for o in self.list_objects():
                if o.name == name:
                    raise DuplicateObject(f"object {name!r} already registered")
            oid = self._next_oid
            self._next_oid += 1
            self.engine.insert(
                OBJECTS_TABLE, [(oid, name, fields, eng.eid, island, 1 if is_temp else 0)]
            )
            return oid

    def deregister_object(self, name: str):
        name = normalize_ident(name)
        with self._writer:
            rows = self._rows(OBJECTS_TABLE)
            kept = [r for r in rows if r[1] != name]
            if len(kept) == len(rows):
                raise NoSuchObject(f"no object {name!r} in catalog")
            self.engine.replace_rows(OBJECTS_TABLE, kept)

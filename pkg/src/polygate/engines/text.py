"""Embedded sorted cell store for free-form text.

Entries are (row, column family, column qualifier, timestamp, value) cells
kept sorted by (row, colfam, colqual, descending timestamp); a put with an
existing full key replaces the value. Scans filter by half-open byte-wise
row range, then substring pattern, then latest-only per column, in that
order, and always return key order.
"""

from __future__ import annotations

import bisect
from typing import List, Optional, Sequence, Tuple

from ..errors import DuplicateObject, InvalidRange, SchemaMismatch
from ..model import ResultSet, Schema, ValueKind, normalize_ident, parse_csv, render_csv
from . import TEXT, EngineBase, split_header

HEADER = "POLYGATE-KV v1"

KV_SCHEMA = Schema(
    [
        ("row", ValueKind.TEXT),
        ("colfam", ValueKind.TEXT),
        ("colqual", ValueKind.TEXT),
        ("ts", ValueKind.INT64),
        ("value", ValueKind.TEXT),
    ]
)

Entry = Tuple[str, str, str, int, str]


def _key(e: Entry):
    return (e[0], e[1], e[2], -e[3])


def _check_entry(e) -> Entry:
    row, colfam, colqual, ts, value = e
    for part, what in ((row, "row"), (colfam, "colfam"), (colqual, "colqual"), (value, "value")):
        if not isinstance(part, str):
            raise SchemaMismatch(f"{what} must be text, got {part!r}")
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise SchemaMismatch(f"timestamp must be an integer, got {ts!r}")
    return (row, colfam, colqual, ts, value)


class _KvTable:
    __slots__ = ("entries", "keys", "version")

    def __init__(self):
        self.entries: List[Entry] = []  # maintained in key order at all times
        self.keys: List[Tuple] = []
        self.version = 0


class TextEngine(EngineBase):
    kind = TEXT

    def create_kv(self, name: str):
        name = normalize_ident(name)
        with self._meta:
            if name in self._objects:
                raise DuplicateObject(f"kv table {name!r} already exists")
            self._add_object(name, _KvTable())

    def drop_kv(self, name: str):
        self.drop_object(normalize_ident(name))

    def put(self, name: str, entries: Sequence[Entry]) -> int:
        name = normalize_ident(name)
        t = self._get(name)
        checked = [_check_entry(e) for e in entries]
        with self._lock(name).write_locked():
            for e in checked:
                k = _key(e)
                i = bisect.bisect_left(t.keys, k)
                if i < len(t.keys) and t.keys[i] == k:
                    t.entries[i] = e  # same full key: replace the value
                else:
                    t.keys.insert(i, k)
                    t.entries.insert(i, e)
            t.version += 1
        return len(checked)

    def scan(
        self,
        name: str,
        start: Optional[str] = None,
        end: Optional[str] = None,
        pattern: Optional[str] = None,
        latest_only: bool = False,
    ) -> ResultSet:
        name = normalize_ident(name)
        if start is not None and end is not None and start > end:
            raise InvalidRange(f"scan range start {start!r} > end {end!r}")
        t = self._get(name)
        with self._lock(name).read_locked():
            lo = 0 if start is None else bisect.bisect_left(t.keys, (start,))
            hi = len(t.keys) if end is None else bisect.bisect_left(t.keys, (end,))
            picked = t.entries[lo:hi]
        if pattern is not None:
            picked = [e for e in picked if pattern in e[4]]
        if latest_only:
            seen = set()
            latest = []
            for e in picked:  # descending ts within each column: first wins
                ident = (e[0], e[1], e[2])
                if ident not in seen:
                    seen.add(ident)
                    latest.append(e)
            picked = latest
        return ResultSet(KV_SCHEMA, picked)

    def get_schema(self, name: str) -> Schema:
        self._get(normalize_ident(name))
        return KV_SCHEMA

    def object_count(self, name: str) -> int:
        name = normalize_ident(name)
        t = self._get(name)
        with self._lock(name).read_locked():
            return len(t.entries)

    def export_object(self, name: str):
        name = normalize_ident(name)
        t = self._get(name)
        with self._lock(name).read_locked():
            return list(t.entries)

    def import_object(self, name: str, state):
        self.create_kv(name)
        self.put(name, state)

    # -- snapshots: header then the key-ordered CSV -------------------------

    def _snapshot_text(self, name: str) -> str:
        t = self._objects[name]
        return HEADER + "\n" + render_csv(ResultSet(KV_SCHEMA, t.entries))

    def _load_snapshot(self, name: str, text: str):
        body = split_header(text, HEADER)
        rows = parse_csv(body, KV_SCHEMA)
        self.create_kv(name)
        self.put(name, rows)

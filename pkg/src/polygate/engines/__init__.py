"""Embedded storage engines: one module per island kind.

All engines share the same shape: a named in-process store with per-object
reader-writer locking (many concurrent reads, exclusive writes per object),
one snapshot file per object under the engine's data directory, and a small
generic surface (object_names/object_count/get_schema/drop_object) used by
the catalog, planner and migrator.
"""

from __future__ import annotations

import os
import threading
from contextlib import contextmanager

from ..errors import NoSuchObject, SnapshotError

RELATIONAL = "relational"
ARRAY = "array"
TEXT = "text"
ENGINE_KINDS = (RELATIONAL, ARRAY, TEXT)

TEMP_PREFIX = "__bdtemp_"
SNAP_EXT = ".snap"


class RWLock:
    """Reader-writer lock; writers exclude everyone, readers share."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False

    @contextmanager
    def read_locked(self):
        with self._cond:
            while self._writer:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                self._cond.notify_all()

    @contextmanager
    def write_locked(self):
        with self._cond:
            while self._writer or self._readers:
                self._cond.wait()
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()


class EngineBase:
    """Common object-map plumbing; subclasses set `kind` and snapshot codecs."""

    kind = None

    def __init__(self, name: str, data_dir: str | None = None):
        self.name = name
        self.data_dir = data_dir
        self._meta = threading.RLock()
        self._objects = {}
        self._locks = {}

    # -- object map -----------------------------------------------------

    def _get(self, name: str):
        with self._meta:
            try:
                return self._objects[name]
            except KeyError:
                raise NoSuchObject(f"{self.kind} engine {self.name!r} has no object {name!r}") from None

    def _lock(self, name: str) -> RWLock:
        with self._meta:
            if name not in self._objects:
                raise NoSuchObject(f"{self.kind} engine {self.name!r} has no object {name!r}")
            return self._locks[name]

    def object_names(self):
        with self._meta:
            return sorted(self._objects)

    def has_object(self, name: str) -> bool:
        with self._meta:
            return name in self._objects

    def drop_object(self, name: str):
        with self._meta:
            if name not in self._objects:
                raise NoSuchObject(f"{self.kind} engine {self.name!r} has no object {name!r}")
            del self._objects[name]
            del self._locks[name]

    def _add_object(self, name: str, obj):
        with self._meta:
            self._objects[name] = obj
            self._locks[name] = RWLock()

    # -- snapshots -------------------------------------------------------
    # One file per object: <data_dir>/<name>.snap. Temps never persist.

    def _snapshot_text(self, name: str) -> str:
        raise NotImplementedError

    def _load_snapshot(self, name: str, text: str):
        raise NotImplementedError

    def flush(self):
        if self.data_dir is None:
            return
        os.makedirs(self.data_dir, exist_ok=True)
        with self._meta:
            names = [n for n in self._objects if not n.startswith(TEMP_PREFIX)]
        for name in names:
            with self._lock(name).read_locked():
                text = self._snapshot_text(name)
            path = os.path.join(self.data_dir, name + SNAP_EXT)
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        keep = {n + SNAP_EXT for n in names}
        for entry in os.listdir(self.data_dir):
            if entry.endswith(SNAP_EXT) and entry not in keep:
                os.remove(os.path.join(self.data_dir, entry))

    def load(self):
        with self._meta:
            self._objects.clear()
            self._locks.clear()
        if self.data_dir is None or not os.path.isdir(self.data_dir):
            return
        for entry in sorted(os.listdir(self.data_dir)):
            if not entry.endswith(SNAP_EXT):
                continue
            name = entry[: -len(SNAP_EXT)]
            path = os.path.join(self.data_dir, entry)
            with open(path, "r", encoding="utf-8", newline="") as f:
                text = f.read()
            try:
                self._load_snapshot(name, text)
            except SnapshotError as e:
                raise SnapshotError(f"{path}: {e}") from None


def split_header(text: str, expected: str):
    """Pop the `POLYGATE-XXX v1` header line, returning the remainder."""
    line, _, rest = text.partition("\n")
    if line != expected:
        raise SnapshotError(f"bad snapshot header {line!r} (expected {expected!r})")
    return rest

"""In-process engine registry emulating the container network: every engine
is reachable through a handle carrying its host:port-style address alias and
an up/down gate. Operations on a down engine fail fast with EngineUnavailable;
stopping waits for in-flight operations to drain (bounded) before the final
snapshot flush.
"""

from __future__ import annotations

import threading
import time
from typing import Dict, Optional

from .engines import ARRAY, RELATIONAL, TEXT
from .engines.array import ArrayEngine
from .engines.relational import RelationalEngine
from .engines.text import TextEngine
from .errors import EngineUnavailable, NoSuchEngine

_ENGINE_CLASSES = {
    RELATIONAL: RelationalEngine,
    ARRAY: ArrayEngine,
    TEXT: TextEngine,
}

DRAIN_TIMEOUT_S = 10.0


def build_engine(kind: str, name: str, data_dir: Optional[str] = None):
    try:
        cls = _ENGINE_CLASSES[kind]
    except KeyError:
        raise NoSuchEngine(f"unknown engine kind {kind!r}") from None
    return cls(name, data_dir)


class EngineHandle:
    """Availability gate around one managed engine instance."""

    def __init__(self, engine, address: str, drain_timeout: float = DRAIN_TIMEOUT_S):
        self.engine = engine
        self.name = engine.name
        self.kind = engine.kind
        self.address = address
        self.drain_timeout = drain_timeout
        self._cond = threading.Condition()
        self._up = True
        self._active = 0

    @property
    def status(self) -> str:
        return "up" if self._up else "down"

    def call(self, fn):
        """Run fn(engine) while holding an activity slot; down -> fail fast."""
        with self._cond:
            if not self._up:
                raise EngineUnavailable(f"engine {self.name!r} is down", engine=self.name)
            self._active += 1
        try:
            return fn(self.engine)
        finally:
            with self._cond:
                self._active -= 1
                self._cond.notify_all()

    def stop(self) -> bool:
        """Mark down, drain active operations (bounded), flush snapshots."""
        with self._cond:
            if not self._up:
                return False
            self._up = False
            deadline = time.monotonic() + self.drain_timeout
            while self._active > 0:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break  # force down with operations still in flight
                self._cond.wait(timeout=remaining)
        self.engine.flush()
        return True

    def start(self) -> bool:
        """Reload snapshots and mark up."""
        with self._cond:
            if self._up:
                return False
        self.engine.load()
        with self._cond:
            self._up = True
        return True


class EngineRegistry:
    """Name -> handle map shared by the planner, migrator and gateway."""

    def __init__(self):
        self._handles: Dict[str, EngineHandle] = {}

    def add(self, handle: EngineHandle):
        if handle.name in self._handles:
            raise NoSuchEngine(f"engine {handle.name!r} already registered")
        self._handles[handle.name] = handle

    def get(self, name: str) -> EngineHandle:
        try:
            return self._handles[name]
        except KeyError:
            raise NoSuchEngine(f"no engine named {name!r}") from None

    def names(self):
        return sorted(self._handles)

    def handles(self):
        return [self._handles[n] for n in self.names()]

    def object_count(self, engine_name: str, object_name: str) -> int:
        return self.get(engine_name).call(lambda e: e.object_count(object_name))

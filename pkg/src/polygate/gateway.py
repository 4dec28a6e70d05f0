"""Query Endpoint, admin API and cluster manager.

Engines run in-process behind address aliases; the HTTP surface is:

  POST /bigdawg/query          polystore query text -> CSV (or JSON with
                               `Accept: application/json`)
  POST /bigdawg/explain        query text -> plan JSON, nothing executed
  GET  /status                 cluster status
  POST /admin/engine/<n>/stop  flush + mark down (idempotent)
  POST /admin/engine/<n>/start reload snapshots + mark up (idempotent)
  GET  /catalog/objects        catalog object rows
  GET  /catalog/engines        catalog engine rows
  POST /admin/load             run the synthetic dataset loader server-side

Error mapping is exact: ParseError/PlanError and other user errors are 400
with {error, position}; EngineUnavailable/NoUpEngineForIsland are 503 with
{error, engine}; anything unexpected is 500. CORS is enabled everywhere so
the admin console can be served from any file server.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, List, Optional, Tuple

from . import datagen, planner
from .catalog import Catalog
from .cluster import EngineHandle, EngineRegistry, build_engine
from .engines import ENGINE_KINDS, RELATIONAL
from .errors import (
    BindError,
    ConfigError,
    EngineUnavailable,
    NoSuchEngine,
    NoUpEngineForIsland,
    ParseError,
    UnavailableError,
    UserError,
)
from .lang import parse_poly
from .logs import configure as configure_logging, log_event
from .model import render_csv

log = logging.getLogger("polygate.gateway")

DEFAULT_CONFIG_PATH = "polygate.conf"
CONFIG_ENV_VAR = "POLYGATE_CONFIG"
MAX_BODY_BYTES = 16 * 1024 * 1024


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EngineConfig:
    name: str
    kind: str
    address: str
    data_dir: str


@dataclass(frozen=True)
class ClusterConfig:
    listen_host: str
    listen_port: int
    engines: Tuple[EngineConfig, ...]
    catalog_engine: str
    log_level: str = "info"


_TOP_KEYS = {"listen", "catalog_engine", "log_level"}
_ENGINE_KEYS = {"kind", "address", "data_dir"}


def parse_config(text: str, base_dir: str = ".") -> ClusterConfig:
    """Line-oriented key=value format with [engine:<name>] sections."""
    top: Dict[str, str] = {}
    engines: List[Tuple[str, Dict[str, str]]] = []
    section: Optional[Dict[str, str]] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not (line.endswith("]") and line.startswith("[engine:")):
                raise ConfigError(f"line {lineno}: bad section {line!r}")
            name = line[len("[engine:") : -1].strip().lower()
            if not name:
                raise ConfigError(f"line {lineno}: engine section needs a name")
            if any(n == name for n, _ in engines):
                raise ConfigError(f"line {lineno}: duplicate engine section {name!r}")
            section = {}
            engines.append((name, section))
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = key.strip(), value.strip()
        if section is None:
            if key not in _TOP_KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            top[key] = value
        else:
            if key not in _ENGINE_KEYS:
                raise ConfigError(f"line {lineno}: unknown engine key {key!r}")
            section[key] = value

    if "listen" not in top:
        raise ConfigError("missing required key 'listen'")
    if "catalog_engine" not in top:
        raise ConfigError("missing required key 'catalog_engine'")
    host, sep, port_text = top["listen"].rpartition(":")
    if not sep or not port_text.isdigit():
        raise ConfigError(f"listen must be host:port, got {top['listen']!r}")
    if not engines:
        raise ConfigError("config defines no engines")

    built = []
    addresses = set()
    for name, kv in engines:
        for req in ("kind", "address"):
            if req not in kv:
                raise ConfigError(f"engine {name!r} is missing {req!r}")
        if kv["kind"] not in ENGINE_KINDS:
            raise ConfigError(f"engine {name!r} has unknown kind {kv['kind']!r}")
        if kv["address"] in addresses:
            raise ConfigError(f"duplicate engine address {kv['address']!r}")
        addresses.add(kv["address"])
        data_dir = kv.get("data_dir", os.path.join("data", name))
        if not os.path.isabs(data_dir):
            data_dir = os.path.join(base_dir, data_dir)
        built.append(EngineConfig(name, kv["kind"], kv["address"], data_dir))

    catalog_engine = top["catalog_engine"].lower()
    by_name = {e.name: e for e in built}
    if catalog_engine not in by_name:
        raise ConfigError(f"catalog_engine {catalog_engine!r} is not a configured engine")
    if by_name[catalog_engine].kind != RELATIONAL:
        raise ConfigError("the catalog engine must be relational")
    log_level = top.get("log_level", "info")
    if log_level not in ("debug", "info", "warning", "error"):
        raise ConfigError(f"unknown log_level {log_level!r}")
    return ClusterConfig(host, int(port_text), tuple(built), catalog_engine, log_level)


def load_config(path: str) -> ClusterConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from None
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# the running service
# ---------------------------------------------------------------------------

class _EngineProxy:
    """Presents an EngineHandle as the raw engine API with availability gating."""

    def __init__(self, handle: EngineHandle):
        self._handle = handle

    def __getattr__(self, attr):
        def call(*args, **kwargs):
            return self._handle.call(lambda e: getattr(e, attr)(*args, **kwargs))

        return call


class GatewayService:
    """Engines + catalog + planner behind one lock-protected admin surface."""

    def __init__(self, config: ClusterConfig):
        self.config = config
        self.logger = configure_logging(config.log_level)
        self.registry = EngineRegistry()
        self.started_at = time.monotonic()
        self.queries_served = 0
        self._stats_lock = threading.Lock()
        self._admin_lock = threading.RLock()
        self.httpd: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

        for ec in config.engines:
            engine = build_engine(ec.kind, ec.name, ec.data_dir)
            engine.load()
            self.registry.add(EngineHandle(engine, ec.address))
            log_event(self.logger, logging.INFO, "engine.ready", name=ec.name,
                      kind=ec.kind, address=ec.address,
                      objects=len(engine.object_names()))

        catalog_handle = self.registry.get(config.catalog_engine)
        self.catalog = Catalog(_EngineProxy(catalog_handle))
        self.catalog.bootstrap()
        for ec in config.engines:
            self.catalog.ensure_engine(ec.name, ec.kind, ec.address)

    # -- queries ---------------------------------------------------------

    def query(self, text: str):
        """Returns (ResultSet, timings dict); raises the usual error family."""
        ctx = planner.QueryContext.fresh()
        t0 = time.perf_counter()
        pq = parse_poly(text)
        t1 = time.perf_counter()
        qplan = planner.plan(pq, self.catalog, self.registry, ctx)
        t2 = time.perf_counter()
        rs = planner.run(qplan, self.catalog, self.registry)
        t3 = time.perf_counter()
        timings = {
            "parse_ms": round((t1 - t0) * 1000, 3),
            "plan_ms": round((t2 - t1) * 1000, 3),
            "execute_ms": round((t3 - t2) * 1000, 3),
        }
        with self._stats_lock:
            self.queries_served += 1
        log_event(self.logger, logging.INFO, "query.done", query_id=ctx.query_id,
                  rows=len(rs.rows), **timings)
        return rs, timings

    def explain(self, text: str) -> dict:
        pq = parse_poly(text)
        return planner.explain(pq, self.catalog, self.registry)

    # -- cluster management -------------------------------------------------

    def stop_engine(self, name: str) -> bool:
        with self._admin_lock:
            handle = self.registry.get(name)
            if handle.status == "down":
                return False
            # catalog row first: once the handle is down its own row is frozen
            self._mirror_status(name, "down")
            handle.stop()
            log_event(self.logger, logging.INFO, "engine.stopped", name=name)
            return True

    def start_engine(self, name: str) -> bool:
        with self._admin_lock:
            handle = self.registry.get(name)
            if handle.status == "up":
                return False
            handle.start()
            # resync every row: rows can go stale while the catalog engine
            # itself is down, and this start may just have revived it
            for h in self.registry.handles():
                self._mirror_status(h.name, h.status)
            log_event(self.logger, logging.INFO, "engine.started", name=name)
            return True

    def _mirror_status(self, name: str, status: str):
        """Best-effort catalog mirror; unreachable only while the catalog
        engine is down, in which case the rows are unobservable anyway."""
        try:
            self.catalog.set_engine_status(name, status)
        except UnavailableError as e:
            log_event(self.logger, logging.WARNING, "catalog.mirror_skipped",
                      name=name, status=status, error=str(e))

    def status(self) -> dict:
        engines = []
        for handle in self.registry.handles():
            if handle.status == "up":
                names = handle.engine.object_names()
                objects = len(
                    [n for n in names if not n.startswith("__bd")]
                )
            else:
                objects = 0
            engines.append(
                {
                    "name": handle.name,
                    "kind": handle.kind,
                    "status": handle.status,
                    "address": handle.address,
                    "objects": objects,
                }
            )
        with self._stats_lock:
            served = self.queries_served
        return {
            "engines": engines,
            "uptime_s": round(time.monotonic() - self.started_at, 3),
            "queries_served": served,
        }

    def load(self, spec: datagen.GenSpec, replace: bool = False) -> Dict[str, int]:
        with self._admin_lock:
            counts = datagen.load_dataset(self.registry, self.catalog, spec, replace=replace)
        log_event(self.logger, logging.INFO, "dataset.loaded", **counts)
        return counts

    # -- lifecycle ---------------------------------------------------------

    def bind(self):
        if self.httpd is not None:
            return
        try:
            self.httpd = ThreadingHTTPServer(
                (self.config.listen_host, self.config.listen_port), _Handler
            )
        except OSError as e:
            raise BindError(
                f"cannot bind {self.config.listen_host}:{self.config.listen_port}: {e}"
            ) from None
        self.httpd.daemon_threads = True
        self.httpd.service = self
        log_event(self.logger, logging.INFO, "gateway.listening",
                  address=f"{self.config.listen_host}:{self.port}")

    @property
    def port(self) -> int:
        return self.httpd.server_address[1] if self.httpd else self.config.listen_port

    def serve_forever(self):
        self.bind()
        self._serving = True
        self.httpd.serve_forever()

    def start_background(self):
        self.bind()
        self._serving = True
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def shutdown(self):
        if self.httpd is not None:
            if getattr(self, "_serving", False):
                self.httpd.shutdown()  # blocks forever unless serve_forever ran
            self.httpd.server_close()
            self.httpd = None
            self._serving = False
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
        for handle in self.registry.handles():
            if handle.status == "up":
                handle.engine.flush()


def serve(config: ClusterConfig) -> GatewayService:
    """Build the cluster from config, bind the listener, return the service."""
    service = GatewayService(config)
    service.bind()
    return service


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

_CORS = {
    "Access-Control-Allow-Origin": "*",
    "Access-Control-Allow-Methods": "GET, POST, OPTIONS",
    "Access-Control-Allow-Headers": "Content-Type, Accept",
}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "polygate/0.1"

    def log_message(self, fmt, *args):  # default stderr chatter off
        pass

    @property
    def service(self) -> GatewayService:
        return self.server.service

    # -- plumbing ---------------------------------------------------------

    def _send(self, code: int, content_type: str, body: bytes):
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for k, v in _CORS.items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, code: int, obj):
        self._send(code, "application/json; charset=utf-8",
                   json.dumps(obj).encode("utf-8"))

    def _send_error_json(self, e: Exception):
        if isinstance(e, ParseError):
            self._send_json(400, {"error": str(e), "position": e.position()})
        elif isinstance(e, UserError):
            self._send_json(400, {"error": str(e), "position": None})
        elif isinstance(e, EngineUnavailable):
            self._send_json(503, {"error": str(e), "engine": e.engine})
        elif isinstance(e, NoUpEngineForIsland):
            self._send_json(503, {"error": str(e), "engine": None, "island": e.island})
        elif isinstance(e, UnavailableError):
            self._send_json(503, {"error": str(e), "engine": None})
        else:
            log_event(self.service.logger, logging.ERROR, "request.failed", error=repr(e))
            self._send_json(500, {"error": f"internal error: {e}"})

    def _body_text(self) -> Optional[str]:
        try:
            length = int(self.headers.get("Content-Length") or 0)
        except ValueError:
            length = 0
        if length < 0 or length > MAX_BODY_BYTES:
            self._send_json(400, {"error": "request body too large", "position": None})
            return None
        raw = self.rfile.read(length) if length else b""
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            self._send_json(400, {"error": "request body is not valid UTF-8",
                                  "position": "1:1"})
            return None

    # -- routing -----------------------------------------------------------

    def do_OPTIONS(self):
        self._send(204, "text/plain", b"")

    def do_GET(self):
        try:
            if self.path == "/status":
                self._send_json(200, self.service.status())
            elif self.path == "/catalog/objects":
                objs = self.service.catalog.list_objects()
                self._send_json(200, [vars(o) for o in objs])
            elif self.path == "/catalog/engines":
                self._send_json(200, [vars(e) for e in self.service.catalog.list_engines()])
            else:
                self._send_json(404, {"error": f"no such path {self.path!r}"})
        except Exception as e:
            self._send_error_json(e)

    def do_POST(self):
        try:
            if self.path == "/bigdawg/query":
                self._post_query()
            elif self.path == "/bigdawg/explain":
                self._post_explain()
            elif self.path.startswith("/admin/engine/"):
                self._post_engine_admin()
            elif self.path == "/admin/load":
                self._post_load()
            else:
                body = self._body_text()
                if body is not None:
                    self._send_json(404, {"error": f"no such path {self.path!r}"})
        except Exception as e:
            self._send_error_json(e)

    def _post_query(self):
        text = self._body_text()
        if text is None:
            return
        try:
            rs, timings = self.service.query(text)
        except Exception as e:
            self._send_error_json(e)
            return
        accept = self.headers.get("Accept", "")
        if "application/json" in accept:
            payload = {
                "schema": [{"name": n, "type": str(k)} for n, k in rs.schema.fields],
                "rows": [list(r) for r in rs.rows],
                "timings": timings,
            }
            self._send_json(200, payload)
        else:
            self._send(200, "text/csv; charset=utf-8", render_csv(rs).encode("utf-8"))

    def _post_explain(self):
        text = self._body_text()
        if text is None:
            return
        try:
            self._send_json(200, self.service.explain(text))
        except Exception as e:
            self._send_error_json(e)

    def _post_engine_admin(self):
        parts = self.path.strip("/").split("/")
        body = self._body_text()
        if body is None:
            return
        if len(parts) != 4 or parts[3] not in ("stop", "start"):
            self._send_json(404, {"error": f"no such path {self.path!r}"})
            return
        name, action = parts[2], parts[3]
        try:
            self.service.registry.get(name)
        except NoSuchEngine:
            self._send_json(404, {"error": f"no engine named {name!r}"})
            return
        try:
            if action == "stop":
                changed = self.service.stop_engine(name)
            else:
                changed = self.service.start_engine(name)
            handle = self.service.registry.get(name)
            self._send_json(200, {"name": name, "status": handle.status, "changed": changed})
        except Exception as e:
            self._send_error_json(e)

    def _post_load(self):
        text = self._body_text()
        if text is None:
            return
        try:
            payload = json.loads(text or "{}")
            if not isinstance(payload, dict):
                raise ValueError("load body must be a JSON object")
            spec = datagen.GenSpec(
                seed=int(payload.get("seed", 42)),
                n_patients=int(payload.get("patients", 100)),
                waveform_len=int(payload.get("waveform_len", 1000)),
                n_notes=int(payload.get("notes", 300)),
            )
            replace = bool(payload.get("replace", False))
        except (ValueError, TypeError) as e:
            self._send_json(400, {"error": f"bad load request: {e}", "position": None})
            return
        try:
            counts = self.service.load(spec, replace=replace)
            self._send_json(200, counts)
        except Exception as e:
            self._send_error_json(e)


# ---------------------------------------------------------------------------
# CLI entry point
# ---------------------------------------------------------------------------

def resolve_config_path(cli_value: Optional[str]) -> str:
    """--config beats POLYGATE_CONFIG beats ./polygate.conf."""
    return cli_value or os.environ.get(CONFIG_ENV_VAR) or DEFAULT_CONFIG_PATH


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="polygate-server", description="Run the polystore gateway")
    ap.add_argument("--config", help="config file path (overrides POLYGATE_CONFIG)")
    args = ap.parse_args(argv)
    path = resolve_config_path(args.config)
    try:
        config = load_config(path)
        service = serve(config)
    except (ConfigError, BindError, UnavailableError) as e:
        print(f"error: {e}")
        return 1
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.shutdown()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

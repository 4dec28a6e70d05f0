"""Planner and executor: turns a parsed polystore query into an ordered list
of Execute/Migrate steps against concrete engines, then runs it.

Planning rules:
  - every embedded cast plans its inner scope recursively, executes it on its
    own island, and migrates the result into a temp object on the enclosing
    scope's anchor engine;
  - when one island query references objects living on several engines, all
    but the anchor's objects are copied to the anchor as temps (anchor = the
    up engine holding the largest referenced object, ties to the lowest eid;
    scopes with no real objects anchor on the island's lowest-eid up engine);
  - the final Execute targets the outermost scope's anchor; a Cleanup step
    listing every temp comes last and runs even when a mid-plan step fails.

Temp names are `__bdtemp_<query_id>_<n>` so concurrent queries never collide.
"""

from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from . import migrate as mig
from .catalog import Catalog
from .cluster import EngineRegistry
from .engines import ARRAY, RELATIONAL, TEXT
from .engines import array as arr_engine
from .engines import relational as rel_engine
from .engines.text import KV_SCHEMA
from .errors import (
    EngineUnavailable,
    NoSuchObject,
    NoUpEngineForIsland,
    PlanError,
)
from .lang import compile_arr, compile_rel, compile_text, map_sources
from .lang.ast import CastNode, PolyQuery, ScopedQuery, TextSpec
from .model import ResultSet, Schema

log = logging.getLogger("polygate.planner")


@dataclass
class QueryContext:
    query_id: str
    temp_counter: int = 0
    binding_counter: int = 0
    created_temps: List[str] = field(default_factory=list)

    @classmethod
    def fresh(cls) -> "QueryContext":
        return cls(query_id=uuid.uuid4().hex[:12])

    def next_temp(self) -> str:
        name = f"__bdtemp_{self.query_id}_{self.temp_counter}"
        self.temp_counter += 1
        self.created_temps.append(name)
        return name

    def next_binding(self) -> str:
        name = f"b{self.binding_counter}"
        self.binding_counter += 1
        return name


@dataclass(frozen=True)
class ExecuteStep:
    engine: str
    island: str
    plan: object  # relational/array plan tree or TextScanParams
    output: str  # binding name


@dataclass(frozen=True)
class MigrateStep:
    source: str  # binding name (cast result) or catalog object name
    source_is_binding: bool
    source_engine: Optional[str]  # engine holding the object (object moves only)
    dest_engine: str
    dest_island: str
    mapping: Optional[mig.ResolvedMapping]  # None for same-island object copies
    temp_name: str
    source_label: str  # cast dest_name / object name, used as text colfam


@dataclass(frozen=True)
class CleanupStep:
    temps: Tuple[Tuple[str, str], ...]  # (engine name, temp name)


@dataclass
class QueryPlan:
    steps: List[object]
    final_output: str
    ctx: QueryContext


# ---------------------------------------------------------------------------
# planning
# ---------------------------------------------------------------------------

def plan(pq: PolyQuery, catalog: Catalog, registry: EngineRegistry,
         ctx: Optional[QueryContext] = None) -> QueryPlan:
    ctx = ctx or QueryContext.fresh()
    steps: List[object] = []
    binding, _ = _plan_scope(pq.root, steps, ctx, catalog, registry)
    temps = []
    for s in steps:
        if isinstance(s, MigrateStep):
            temps.append((s.dest_engine, s.temp_name))
    steps.append(CleanupStep(tuple(temps)))
    return QueryPlan(steps, binding, ctx)


def _plan_scope(scoped: ScopedQuery, steps, ctx, catalog, registry):
    """Append this scope's steps; returns (output binding, output schema)."""
    island = scoped.island

    # resolve this scope's real (non-cast) objects through the catalog
    real: Dict[str, Tuple] = {}
    for cast in scoped.casts():
        if cast.dest_island != island:
            raise PlanError(
                f"cast destination island {cast.dest_island!r} does not match "
                f"the enclosing {island!r} scope"
            )
        try:
            existing = catalog.find_object(cast.dest_name)
        except NoSuchObject:
            existing = None
        if existing is not None and not existing.is_temp:
            raise PlanError(
                f"cast name {cast.dest_name!r} collides with an existing object"
            )
    for src in _scope_sources(scoped):
        if isinstance(src, CastNode):
            continue
        obj, eng = catalog.resolve(src)
        if obj.island != island:
            raise PlanError(
                f"object {src!r} belongs to the {obj.island} island, not {island}"
            )
        if eng.status != "up":
            raise EngineUnavailable(f"engine {eng.name!r} is down", engine=eng.name)
        real[obj.name] = (obj, eng)

    anchor = _choose_anchor(island, real, catalog, registry)

    # co-locate: copy every non-anchor object to the anchor as a temp
    rename: Dict[str, str] = {}
    overlay_rel: Dict[str, Schema] = {}
    overlay_arr: Dict[str, tuple] = {}
    for name, (obj, eng) in real.items():
        if eng.name == anchor.name:
            continue
        temp = ctx.next_temp()
        rename[name] = temp
        steps.append(
            MigrateStep(
                source=name,
                source_is_binding=False,
                source_engine=eng.name,
                dest_engine=anchor.name,
                dest_island=island,
                mapping=None,
                temp_name=temp,
                source_label=name,
            )
        )
        handle = registry.get(eng.name)
        if island == ARRAY:
            overlay_arr[temp] = handle.call(lambda e: e.get_array_meta(name))
        else:
            overlay_rel[temp] = handle.call(lambda e: e.get_schema(name))

    # plan casts: inner scope first, then migrate its binding onto the anchor
    cast_temp: Dict[int, str] = {}
    for cast in scoped.casts():
        inner_binding, inner_schema = _plan_scope(cast.inner, steps, ctx, catalog, registry)
        mapping = mig.resolve_mapping(cast.spec, inner_schema, island)
        temp = ctx.next_temp()
        cast_temp[id(cast)] = temp
        steps.append(
            MigrateStep(
                source=inner_binding,
                source_is_binding=True,
                source_engine=None,
                dest_engine=anchor.name,
                dest_island=island,
                mapping=mapping,
                temp_name=temp,
                source_label=cast.dest_name,
            )
        )
        if island == ARRAY:
            overlay_arr[temp] = mapping.array_meta()
        else:
            overlay_rel[temp] = mapping.flattened_schema()

    def substitute(src):
        if isinstance(src, CastNode):
            return cast_temp[id(src)]
        return rename.get(src, src)

    rewritten = map_sources(scoped, substitute)
    anchor_handle = registry.get(anchor.name)

    if island == RELATIONAL:
        def resolve_schema(name: str) -> Schema:
            if name in overlay_rel:
                return overlay_rel[name]
            return anchor_handle.call(lambda e: e.get_schema(name))

        compiled = compile_rel(rewritten.body, resolve_schema)
        out_schema = rel_engine.output_schema(
            rel_engine.bind_plan(compiled, resolve_schema).labels
        )
    elif island == ARRAY:
        def resolve_array(name: str):
            if name in overlay_arr:
                return overlay_arr[name]
            return anchor_handle.call(lambda e: e.get_array_meta(name))

        compiled = compile_arr(rewritten.body, resolve_array)
        bound = arr_engine.bind_plan(compiled, resolve_array)
        out_schema = arr_engine.flatten(bound, {}).schema
    else:
        compiled = compile_text(rewritten.body)
        out_schema = KV_SCHEMA

    binding = ctx.next_binding()
    steps.append(ExecuteStep(anchor.name, island, compiled, binding))
    return binding, out_schema


def _scope_sources(scoped: ScopedQuery):
    body = scoped.body
    if island_of(body) == RELATIONAL:
        yield body.base.source
        for j in body.joins:
            yield j.table.source
    elif island_of(body) == TEXT:
        yield body.table
    else:
        node = body
        while not hasattr(node, "source"):
            node = node.input
        yield node.source


def island_of(body) -> str:
    if isinstance(body, TextSpec):
        return TEXT
    if hasattr(body, "base"):
        return RELATIONAL
    return ARRAY


def _choose_anchor(island, real, catalog, registry):
    """The engine entry this scope executes on."""
    if real:
        engines = {eng.eid: eng for _, eng in real.values()}
        if len(engines) == 1:
            return next(iter(engines.values()))
        best = None  # (count, -eid) maximized, eid ascending on ties
        for name, (obj, eng) in real.items():
            count = registry.object_count(eng.name, name)
            key = (count, -eng.eid)
            if best is None or key > best[0]:
                best = (key, eng)
        return best[1]
    candidates = [
        e for e in catalog.list_engines() if e.kind == island and e.status == "up"
    ]
    if not candidates:
        raise NoUpEngineForIsland(f"no up engine for the {island} island", island=island)
    return min(candidates, key=lambda e: e.eid)


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

def run(qplan: QueryPlan, catalog: Catalog, registry: EngineRegistry) -> ResultSet:
    bindings: Dict[str, ResultSet] = {}
    created: List[Tuple[str, str]] = []  # (engine name, temp name) actually made
    registered: List[str] = []  # temp names in the catalog
    cleaned = False
    try:
        for idx, step in enumerate(qplan.steps):
            try:
                if isinstance(step, ExecuteStep):
                    bindings[step.output] = _run_execute(step, registry)
                elif isinstance(step, MigrateStep):
                    _run_migrate(step, bindings, catalog, registry, created, registered)
                else:
                    _cleanup(created, registered, catalog, registry)
                    cleaned = True
            except Exception as e:
                e.step_index = idx
                raise
        return bindings[qplan.final_output]
    finally:
        if not cleaned:
            _cleanup(created, registered, catalog, registry)


def _run_execute(step: ExecuteStep, registry) -> ResultSet:
    handle = registry.get(step.engine)
    if step.island == TEXT:
        p = step.plan
        return handle.call(
            lambda e: e.scan(p.table, p.start, p.end, p.pattern, p.latest_only)
        )
    return handle.call(lambda e: e.execute(step.plan))


def _run_migrate(step: MigrateStep, bindings, catalog, registry, created, registered):
    dest = registry.get(step.dest_engine)
    if step.source_is_binding:
        rs = bindings[step.source]
        dest.call(
            lambda e: mig.migrate(
                rs,
                step.dest_island,
                None,
                e,
                step.temp_name,
                step.source_label,
                mapping=step.mapping,
            )
        )
    else:
        src = registry.get(step.source_engine)
        state = src.call(lambda e: e.export_object(step.source))
        dest.call(lambda e: e.import_object(step.temp_name, state))
    created.append((step.dest_engine, step.temp_name))
    # visible only once the data is fully written
    if step.mapping is not None:
        names = step.mapping.flattened_schema().names
    else:
        names = dest.call(lambda e: e.get_schema(step.temp_name)).names
    catalog.register_object(
        step.temp_name, ",".join(names), step.dest_engine, step.dest_island, is_temp=True
    )
    registered.append(step.temp_name)


def _cleanup(created, registered, catalog, registry):
    """Best-effort removal of every temp; failures are logged, never raised."""
    for name in registered:
        try:
            catalog.deregister_object(name)
        except Exception as e:
            log.warning("cleanup: could not deregister %s: %s", name, e)
    registered.clear()
    for engine_name, temp in created:
        try:
            registry.get(engine_name).call(lambda e: e.drop_object(temp))
        except Exception as e:
            log.warning("cleanup: could not drop %s on %s: %s", temp, engine_name, e)
    created.clear()


# ---------------------------------------------------------------------------
# explain
# ---------------------------------------------------------------------------

def explain(pq: PolyQuery, catalog: Catalog, registry: EngineRegistry) -> dict:
    """The plan as stable JSON-ready structure, without executing anything."""
    ctx = QueryContext.fresh()
    qplan = plan(pq, catalog, registry, ctx)
    redact = lambda name: name.replace(f"__bdtemp_{ctx.query_id}_", "__bdtemp_<q>_")
    steps = []
    for s in qplan.steps:
        if isinstance(s, ExecuteStep):
            steps.append(
                {"kind": "execute", "engine": s.engine, "island": s.island, "output": s.output}
            )
        elif isinstance(s, MigrateStep):
            steps.append(
                {
                    "kind": "migrate",
                    "source": redact(s.source),
                    "dest_engine": s.dest_engine,
                    "dest_island": s.dest_island,
                    "temp": redact(s.temp_name),
                }
            )
        else:
            steps.append({"kind": "cleanup", "temps": [redact(t) for _, t in s.temps]})
    return {"steps": steps, "final_output": qplan.final_output}

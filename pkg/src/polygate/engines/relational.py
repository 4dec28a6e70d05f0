"""Embedded relational engine: tables plus a Volcano-style operator executor.

Plans are declarative trees (Scan/Filter/Project/Join/Aggregate/Sort/Limit)
bound against a schema resolver before execution; all name and type errors
surface at bind time as PlanError, never mid-execution.

Semantics: bag (no implicit dedup), inner hash equi-join emitting rows in
left-to-right nested iteration order over insertion order, aggregates with
count/sum/avg/min/max (Nulls ignored, all-Null group -> Null, count -> 0),
stable Sort over the model's total order, Limit applied last. Output order
without Sort is fully deterministic.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from ..errors import DuplicateObject, NoSuchObject, PlanError
from ..expr import BOOL, Bound, Col, ColLabel, Expr, bind as bind_expr, resolve_col
from ..model import (
    ResultSet,
    Schema,
    ValueKind,
    compare,
    deduped_schema,
    normalize_ident,
    parse_csv,
    render_csv,
)
from . import RELATIONAL, EngineBase, split_header

HEADER = "POLYGATE-REL v1"

AGG_FNS = ("count", "sum", "avg", "min", "max")


# ---------------------------------------------------------------------------
# declarative plan nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scan:
    table: str
    alias: Optional[str] = None  # qualifier for the scanned columns


@dataclass(frozen=True)
class Filter:
    input: object
    predicate: Expr


@dataclass(frozen=True)
class Project:
    input: object
    items: Tuple[Tuple[Optional[str], Expr], ...]  # (output name or None, expr)


@dataclass(frozen=True)
class Join:
    left: object
    right: object
    left_keys: Tuple[Col, ...]
    right_keys: Tuple[Col, ...]


@dataclass(frozen=True)
class AggSpec:
    fn: str  # count | sum | avg | min | max
    arg: Optional[Expr]  # None means count(*)
    label: Optional[str] = None


@dataclass(frozen=True)
class Aggregate:
    input: object
    keys: Tuple[Col, ...]
    aggs: Tuple[AggSpec, ...]


@dataclass(frozen=True)
class Sort:
    input: object
    keys: Tuple[Tuple[Col, bool], ...]  # (column, descending)


@dataclass(frozen=True)
class Limit:
    input: object
    n: int


# ---------------------------------------------------------------------------
# binding (schema resolution + type check)
# ---------------------------------------------------------------------------

class BoundPlan:
    """A bound operator: output labels, referenced tables, and a runner."""

    def __init__(self, labels: List[ColLabel], tables: set, run: Callable):
        self.labels = labels
        self.tables = tables
        self.run = run  # run(env: {table: rows}) -> list[tuple]


def bind_plan(plan, resolve_schema: Callable[[str], Schema]) -> BoundPlan:
    """Bind a declarative plan; raises PlanError/NoSuchObject on any defect."""
    if isinstance(plan, Scan):
        schema = resolve_schema(plan.table)
        qual = plan.alias if plan.alias else plan.table
        labels = [ColLabel(qual, n, k) for n, k in schema.fields]
        table = plan.table
        return BoundPlan(labels, {table}, lambda env: env[table])

    if isinstance(plan, Filter):
        child = bind_plan(plan.input, resolve_schema)
        pred = bind_expr(plan.predicate, child.labels)
        if pred.kind is not BOOL:
            raise PlanError("filter predicate must be boolean")
        f = pred.eval
        return BoundPlan(
            child.labels, child.tables, lambda env: [r for r in child.run(env) if f(r)]
        )

    if isinstance(plan, Project):
        child = bind_plan(plan.input, resolve_schema)
        if not plan.items:
            raise PlanError("projection needs at least one item")
        bounds, labels = [], []
        for i, (name, ex) in enumerate(plan.items):
            b = bind_expr(ex, child.labels)
            if b.kind is BOOL:
                raise PlanError("boolean expression not allowed in a projection")
            if name is None:
                name = ex.name if isinstance(ex, Col) else f"col{i + 1}"
            labels.append(ColLabel(None, normalize_ident(name), b.kind))
            bounds.append(b.eval)

        def run_project(env, bounds=bounds):
            return [tuple(f(r) for f in bounds) for r in child.run(env)]

        return BoundPlan(labels, child.tables, run_project)

    if isinstance(plan, Join):
        left = bind_plan(plan.left, resolve_schema)
        right = bind_plan(plan.right, resolve_schema)
        if not plan.left_keys or len(plan.left_keys) != len(plan.right_keys):
            raise PlanError("join requires matching non-empty key lists")
        lidx = [resolve_col(c, left.labels) for c in plan.left_keys]
        ridx = [resolve_col(c, right.labels) for c in plan.right_keys]
        for li, ri in zip(lidx, ridx):
            lk, rk = left.labels[li].kind, right.labels[ri].kind
            numeric = {ValueKind.INT64, ValueKind.FLOAT64}
            if lk != rk and not (lk in numeric and rk in numeric):
                raise PlanError(f"join key kinds {lk}/{rk} are not comparable")
        labels = left.labels + right.labels

        def run_join(env):
            # hash build on the right; per left row, matches appear in right
            # insertion order, reproducing nested-loop output order exactly
            buckets = {}
            for rr in right.run(env):
                key = tuple(rr[i] for i in ridx)
                if any(v is None for v in key):
                    continue
                buckets.setdefault(key, []).append(rr)
            out = []
            for lr in left.run(env):
                key = tuple(lr[i] for i in lidx)
                if any(v is None for v in key):
                    continue
                for rr in buckets.get(key, ()):
                    out.append(lr + rr)
            return out

        return BoundPlan(labels, left.tables | right.tables, run_join)

    if isinstance(plan, Aggregate):
        child = bind_plan(plan.input, resolve_schema)
        key_idx = [resolve_col(c, child.labels) for c in plan.keys]
        aggs = []
        labels = [child.labels[i] for i in key_idx]
        for spec in plan.aggs:
            if spec.fn not in AGG_FNS:
                raise PlanError(f"unknown aggregate function {spec.fn!r}")
            if spec.arg is None:
                if spec.fn != "count":
                    raise PlanError(f"{spec.fn}(*) is not defined")
                arg, out_kind = None, ValueKind.INT64
            else:
                arg = bind_expr(spec.arg, child.labels)
                if arg.kind is BOOL:
                    raise PlanError("boolean expression not allowed in an aggregate")
                if spec.fn in ("sum", "avg") and arg.kind == ValueKind.TEXT:
                    raise PlanError(f"{spec.fn} requires a numeric argument")
                out_kind = {
                    "count": ValueKind.INT64,
                    "sum": arg.kind,
                    "avg": ValueKind.FLOAT64,
                    "min": arg.kind,
                    "max": arg.kind,
                }[spec.fn]
            label = normalize_ident(spec.label) if spec.label else spec.fn
            labels.append(ColLabel(None, label, out_kind))
            aggs.append((spec.fn, arg))
        if not plan.aggs:
            raise PlanError("aggregate needs at least one function")

        def run_agg(env):
            groups = {}  # null-safe group key -> (representative key values, rows)
            for r in child.run(env):
                gk = tuple(_group_key(r[i]) for i in key_idx)
                slot = groups.get(gk)
                if slot is None:
                    groups[gk] = (tuple(r[i] for i in key_idx), [r])
                else:
                    slot[1].append(r)
            if not key_idx and not groups:
                groups[()] = ((), [])  # ungrouped aggregate always yields one row
            out = []
            for rep, rows in groups.values():
                vals = []
                for fn, arg in aggs:
                    if arg is None:
                        vals.append(len(rows))
                    else:
                        vals.append(_fold(fn, [arg.eval(r) for r in rows]))
                out.append(rep + tuple(vals))
            return out

        return BoundPlan(labels, child.tables, run_agg)

    if isinstance(plan, Sort):
        child = bind_plan(plan.input, resolve_schema)
        if not plan.keys:
            raise PlanError("sort needs at least one key")
        keys = [(resolve_col(c, child.labels), desc) for c, desc in plan.keys]

        def cmp_rows(a, b):
            for idx, desc in keys:
                c = compare(a[idx], b[idx])
                if c:
                    return -c if desc else c
            return 0

        return BoundPlan(
            child.labels,
            child.tables,
            lambda env: sorted(child.run(env), key=functools.cmp_to_key(cmp_rows)),
        )

    if isinstance(plan, Limit):
        if not isinstance(plan.n, int) or isinstance(plan.n, bool) or plan.n < 0:
            raise PlanError(f"limit must be a non-negative integer, got {plan.n!r}")
        child = bind_plan(plan.input, resolve_schema)
        return BoundPlan(child.labels, child.tables, lambda env: child.run(env)[: plan.n])

    raise PlanError(f"unknown plan node {plan!r}")


def _group_key(v):
    # Null groups with Null (sort-equality), numerics unify exactly
    if v is None:
        return (0,)
    if isinstance(v, str):
        return (2, v)
    return (1, v)


def _fold(fn: str, values: list):
    vals = [v for v in values if v is not None]
    if fn == "count":
        return len(vals)
    if not vals:
        return None
    if fn == "sum":
        return sum(vals)
    if fn == "avg":
        return sum(vals) / len(vals)
    if fn == "min":
        return functools.reduce(lambda a, b: b if compare(b, a) < 0 else a, vals)
    return functools.reduce(lambda a, b: b if compare(b, a) > 0 else a, vals)


def output_schema(labels: List[ColLabel]) -> Schema:
    """Public ResultSet schema from bound labels; duplicate names get _N suffixes."""
    return deduped_schema((lab.name, lab.kind) for lab in labels)


# ---------------------------------------------------------------------------
# the engine
# ---------------------------------------------------------------------------

class _Table:
    __slots__ = ("schema", "rows", "version")

    def __init__(self, schema: Schema):
        self.schema = schema
        self.rows: List[Tuple] = []
        self.version = 0


class RelationalEngine(EngineBase):
    kind = RELATIONAL

    def create_table(self, name: str, schema: Schema):
        name = normalize_ident(name)
        with self._meta:
            if name in self._objects:
                raise DuplicateObject(f"table {name!r} already exists")
            self._add_object(name, _Table(schema))

    def drop_table(self, name: str):
        self.drop_object(normalize_ident(name))

    def insert(self, name: str, rows: Sequence[Sequence]) -> int:
        name = normalize_ident(name)
        t = self._get(name)
        checked = [t.schema.check_row(r) for r in rows]
        with self._lock(name).write_locked():
            t.rows.extend(checked)
            t.version += 1
        return len(checked)

    def replace_rows(self, name: str, rows: Sequence[Sequence]) -> int:
        """Atomically swap the full table contents (catalog writer path)."""
        name = normalize_ident(name)
        t = self._get(name)
        checked = [t.schema.check_row(r) for r in rows]
        with self._lock(name).write_locked():
            t.rows = checked
            t.version += 1
        return len(checked)

    def get_schema(self, name: str) -> Schema:
        return self._get(normalize_ident(name)).schema

    def object_count(self, name: str) -> int:
        name = normalize_ident(name)
        t = self._get(name)
        with self._lock(name).read_locked():
            return len(t.rows)

    def table_version(self, name: str) -> int:
        return self._get(normalize_ident(name)).version

    def export_object(self, name: str):
        name = normalize_ident(name)
        t = self._get(name)
        with self._lock(name).read_locked():
            return (t.schema, list(t.rows))

    def import_object(self, name: str, state):
        schema, rows = state
        self.create_table(name, schema)
        self.insert(name, rows)

    def compile_plan(self, plan, schema_overlay=None) -> BoundPlan:
        overlay = schema_overlay or {}

        def resolve(table):
            if table in overlay:
                return overlay[table]
            return self.get_schema(table)

        return bind_plan(plan, resolve)

    def execute(self, plan) -> ResultSet:
        bound = plan if isinstance(plan, BoundPlan) else self.compile_plan(plan)
        tables = sorted(bound.tables)
        locks = [self._lock(t) for t in tables]
        acquired = []
        try:
            for lock in locks:
                cm = lock.read_locked()
                cm.__enter__()
                acquired.append(cm)
            env = {t: self._get(t).rows for t in tables}
            rows = bound.run(env)
        finally:
            for cm in reversed(acquired):
                cm.__exit__(None, None, None)
        return ResultSet(output_schema(bound.labels), rows)

    # -- snapshots: header, schema line, then the render_csv body ----------

    def _snapshot_text(self, name: str) -> str:
        t = self._objects[name]
        body = render_csv(ResultSet(t.schema, t.rows))
        return f"{HEADER}\n{t.schema.describe()}\n{body}"

    def _load_snapshot(self, name: str, text: str):
        rest = split_header(text, HEADER)
        schema_line, _, body = rest.partition("\n")
        schema = Schema.parse(schema_line)
        rows = parse_csv(body, schema)
        self.create_table(name, schema)
        self.insert(name, rows)

"""Embedded n-dimensional sparse array engine.

Arrays store cells as a coordinate-vector -> attribute-tuple map inside a
declared integer box. Plans (Scan/Subarray/Filter/Project/Apply/Aggregate)
execute over that map and always flatten to a ResultSet of one row per cell:
dimension columns first (Int64), then attributes, ordered by coordinate
lexicographic order. Subarray narrows by intersection, so an empty window is
an empty result, never an error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..errors import (
    CoordOutOfBounds,
    DuplicateObject,
    PlanError,
    SchemaMismatch,
)
from ..expr import BOOL, ColLabel, Expr, bind as bind_expr
from ..model import ResultSet, Schema, ValueKind, deduped_schema, normalize_ident, parse_csv, render_csv
from . import ARRAY, EngineBase, split_header
from .relational import AGG_FNS, _fold

HEADER = "POLYGATE-ARR v1"

Dim = Tuple[str, int, int]  # (name, lo, hi)


@dataclass(frozen=True)
class Scan:
    array: str


@dataclass(frozen=True)
class Subarray:
    input: object
    bounds: Tuple[int, ...]  # flat (lo1, hi1, lo2, hi2, ...), one pair per dimension


@dataclass(frozen=True)
class Filter:
    input: object
    predicate: Expr


@dataclass(frozen=True)
class Project:
    input: object
    attrs: Tuple[str, ...]


@dataclass(frozen=True)
class Apply:
    input: object
    name: str
    value: Expr


@dataclass(frozen=True)
class Aggregate:
    input: object
    fn: str
    attr: Optional[str]  # None means count(*)
    group_dims: Tuple[str, ...] = ()


class BoundArrPlan:
    """Bound operator: dims, attribute fields, referenced arrays, runner."""

    def __init__(self, dims: List[Dim], attrs: List[Tuple[str, ValueKind]], arrays: set, run: Callable):
        self.dims = dims
        self.attrs = attrs
        self.arrays = arrays
        self.run = run  # run(env: {name: cells-dict}) -> cells-dict

    def labels(self) -> List[ColLabel]:
        return [ColLabel(None, n, ValueKind.INT64) for n, _, _ in self.dims] + [
            ColLabel(None, n, k) for n, k in self.attrs
        ]


def bind_plan(plan, resolve_array: Callable[[str], Tuple[List[Dim], Schema]]) -> BoundArrPlan:
    """Bind a declarative array plan against a (dims, attrs) resolver."""
    if isinstance(plan, Scan):
        dims, attrs = resolve_array(plan.array)
        name = plan.array
        return BoundArrPlan(list(dims), list(attrs.fields), {name}, lambda env: env[name])

    if isinstance(plan, Subarray):
        child = bind_plan(plan.input, resolve_array)
        if len(plan.bounds) != 2 * len(child.dims):
            raise PlanError(
                f"subarray has {len(plan.bounds)} bounds for {len(child.dims)} dimensions"
                f" (expected {2 * len(child.dims)})"
            )
        for b in plan.bounds:
            if not isinstance(b, int) or isinstance(b, bool):
                raise PlanError("subarray bounds must be integers")
        pairs = [(plan.bounds[i], plan.bounds[i + 1]) for i in range(0, len(plan.bounds), 2)]
        dims = [
            (name, max(lo, wlo), min(hi, whi))
            for (name, lo, hi), (wlo, whi) in zip(child.dims, pairs)
        ]

        def run_sub(env):
            cells = child.run(env)
            out = {}
            for coords, tup in cells.items():
                if all(lo <= c <= hi for c, (_, lo, hi) in zip(coords, dims)):
                    out[coords] = tup
            return out

        return BoundArrPlan(dims, child.attrs, child.arrays, run_sub)

    if isinstance(plan, Filter):
        child = bind_plan(plan.input, resolve_array)
        pred = bind_expr(plan.predicate, child.labels())
        if pred.kind is not BOOL:
            raise PlanError("filter predicate must be boolean")
        f = pred.eval

        def run_filter(env):
            cells = child.run(env)
            return {c: t for c, t in cells.items() if f(c + t)}

        return BoundArrPlan(child.dims, child.attrs, child.arrays, run_filter)

    if isinstance(plan, Project):
        child = bind_plan(plan.input, resolve_array)
        if not plan.attrs:
            raise PlanError("project needs at least one attribute")
        attr_names = [n for n, _ in child.attrs]
        idx = []
        for a in plan.attrs:
            a = a.lower()
            if a not in attr_names:
                raise PlanError(f"unknown attribute {a!r}")
            idx.append(attr_names.index(a))
        attrs = [child.attrs[i] for i in idx]

        def run_project(env):
            cells = child.run(env)
            return {c: tuple(t[i] for i in idx) for c, t in cells.items()}

        return BoundArrPlan(child.dims, attrs, child.arrays, run_project)

    if isinstance(plan, Apply):
        child = bind_plan(plan.input, resolve_array)
        name = normalize_ident(plan.name)
        taken = {n for n, _, _ in child.dims} | {n for n, _ in child.attrs}
        if name in taken:
            raise PlanError(f"apply name {name!r} collides with an existing dimension or attribute")
        bound = bind_expr(plan.value, child.labels())
        if bound.kind is BOOL:
            raise PlanError("boolean expression not allowed as an attribute value")
        f = bound.eval

        def run_apply(env):
            cells = child.run(env)
            return {c: t + (f(c + t),) for c, t in cells.items()}

        return BoundArrPlan(child.dims, child.attrs + [(name, bound.kind)], child.arrays, run_apply)

    if isinstance(plan, Aggregate):
        child = bind_plan(plan.input, resolve_array)
        if plan.fn not in AGG_FNS:
            raise PlanError(f"unknown aggregate function {plan.fn!r}")
        dim_names = [n for n, _, _ in child.dims]
        attr_names = [n for n, _ in child.attrs]
        if plan.attr is None:
            if plan.fn != "count":
                raise PlanError(f"{plan.fn}(*) is not defined")
            arg_idx, out_kind, label = None, ValueKind.INT64, "count"
        else:
            a = plan.attr.lower()
            if a not in attr_names:
                raise PlanError(f"unknown attribute {a!r}")
            arg_idx = attr_names.index(a)
            arg_kind = child.attrs[arg_idx][1]
            if plan.fn in ("sum", "avg") and arg_kind == ValueKind.TEXT:
                raise PlanError(f"{plan.fn} requires a numeric attribute")
            out_kind = {
                "count": ValueKind.INT64,
                "sum": arg_kind,
                "avg": ValueKind.FLOAT64,
                "min": arg_kind,
                "max": arg_kind,
            }[plan.fn]
            label = f"{a}_{plan.fn}"
        g_idx = []
        for d in plan.group_dims:
            d = d.lower()
            if d not in dim_names:
                raise PlanError(f"unknown dimension {d!r}")
            g_idx.append(dim_names.index(d))
        dims = [child.dims[i] for i in g_idx]

        def run_agg(env):
            cells = child.run(env)
            groups: Dict[Tuple, list] = {}
            for coords, tup in cells.items():
                gk = tuple(coords[i] for i in g_idx)
                groups.setdefault(gk, []).append(tup)
            if not g_idx and not groups:
                groups[()] = []  # ungrouped aggregate always yields one cell
            out = {}
            for gk, tuples in groups.items():
                if arg_idx is None:
                    out[gk] = (len(tuples),)
                else:
                    out[gk] = (_fold(plan.fn, [t[arg_idx] for t in tuples]),)
            return out

        return BoundArrPlan(dims, [(label, out_kind)], child.arrays, run_agg)

    raise PlanError(f"unknown array plan node {plan!r}")


class _Array:
    __slots__ = ("dims", "attrs", "cells", "version")

    def __init__(self, dims: List[Dim], attrs: Schema):
        self.dims = dims
        self.attrs = attrs
        self.cells: Dict[Tuple[int, ...], Tuple] = {}
        self.version = 0


class ArrayEngine(EngineBase):
    kind = ARRAY

    def create_array(self, name: str, dims: Sequence[Dim], attrs: Schema):
        name = normalize_ident(name)
        if not dims:
            raise SchemaMismatch("an array needs at least one dimension")
        if attrs.arity() == 0:
            raise SchemaMismatch("an array needs at least one attribute")
        norm = []
        for dname, lo, hi in dims:
            dname = normalize_ident(dname)
            if not isinstance(lo, int) or not isinstance(hi, int) or lo > hi:
                raise SchemaMismatch(f"dimension {dname!r} has invalid bounds [{lo},{hi}]")
            norm.append((dname, lo, hi))
        names = [n for n, _, _ in norm] + attrs.names
        if len(set(names)) != len(names):
            raise SchemaMismatch("dimension and attribute names must be jointly unique")
        with self._meta:
            if name in self._objects:
                raise DuplicateObject(f"array {name!r} already exists")
            self._add_object(name, _Array(norm, attrs))

    def drop_array(self, name: str):
        self.drop_object(normalize_ident(name))

    def put_cells(self, name: str, cells: Sequence[Tuple[Sequence[int], Sequence]]) -> int:
        """Upsert (coords, attr-tuple) pairs; returns the number written."""
        name = normalize_ident(name)
        a = self._get(name)
        checked = []
        for coords, tup in cells:
            if len(coords) != len(a.dims):
                raise CoordOutOfBounds(
                    f"coordinate arity {len(coords)} != {len(a.dims)} dimensions"
                )
            for c, (dname, lo, hi) in zip(coords, a.dims):
                if not isinstance(c, int) or isinstance(c, bool):
                    raise CoordOutOfBounds(f"coordinate {c!r} for {dname!r} is not an integer")
                if not lo <= c <= hi:
                    raise CoordOutOfBounds(f"coordinate {c} outside {dname!r} range [{lo},{hi}]")
            checked.append((tuple(coords), a.attrs.check_row(tup)))
        with self._lock(name).write_locked():
            for coords, tup in checked:
                a.cells[coords] = tup
            a.version += 1
        return len(checked)

    def get_array_meta(self, name: str) -> Tuple[List[Dim], Schema]:
        a = self._get(normalize_ident(name))
        return (list(a.dims), a.attrs)

    def get_schema(self, name: str) -> Schema:
        dims, attrs = self.get_array_meta(name)
        return deduped_schema(
            [(n, ValueKind.INT64) for n, _, _ in dims] + list(attrs.fields)
        )

    def object_count(self, name: str) -> int:
        name = normalize_ident(name)
        a = self._get(name)
        with self._lock(name).read_locked():
            return len(a.cells)

    def export_object(self, name: str):
        name = normalize_ident(name)
        a = self._get(name)
        with self._lock(name).read_locked():
            return (list(a.dims), a.attrs, dict(a.cells))

    def import_object(self, name: str, state):
        dims, attrs, cells = state
        self.create_array(name, dims, attrs)
        if cells:
            self.put_cells(name, list(cells.items()))

    def compile_plan(self, plan, meta_overlay=None) -> BoundArrPlan:
        overlay = meta_overlay or {}

        def resolve(name):
            if name in overlay:
                return overlay[name]
            return self.get_array_meta(name)

        return bind_plan(plan, resolve)

    def execute(self, plan) -> ResultSet:
        bound = plan if isinstance(plan, BoundArrPlan) else self.compile_plan(plan)
        arrays = sorted(bound.arrays)
        locks = [self._lock(n) for n in arrays]
        acquired = []
        try:
            for lock in locks:
                cm = lock.read_locked()
                cm.__enter__()
                acquired.append(cm)
            env = {n: self._get(n).cells for n in arrays}
            cells = bound.run(env)
        finally:
            for cm in reversed(acquired):
                cm.__exit__(None, None, None)
        return flatten(bound, cells)

    # -- snapshots: header, dims line, attrs line, flattened CSV -----------

    def _snapshot_text(self, name: str) -> str:
        a = self._objects[name]
        dims_line = ",".join(f"{n}:{lo}:{hi}" for n, lo, hi in a.dims)
        schema = deduped_schema(
            [(n, ValueKind.INT64) for n, _, _ in a.dims] + list(a.attrs.fields)
        )
        rows = [coords + tup for coords, tup in sorted(a.cells.items())]
        body = render_csv(ResultSet(schema, rows))
        return f"{HEADER}\n{dims_line}\n{a.attrs.describe()}\n{body}"

    def _load_snapshot(self, name: str, text: str):
        rest = split_header(text, HEADER)
        dims_line, _, rest = rest.partition("\n")
        attrs_line, _, body = rest.partition("\n")
        dims = []
        for part in dims_line.split(","):
            dname, lo, hi = part.split(":")
            dims.append((dname, int(lo), int(hi)))
        attrs = Schema.parse(attrs_line)
        schema = deduped_schema([(n, ValueKind.INT64) for n, _, _ in dims] + list(attrs.fields))
        rows = parse_csv(body, schema)
        nd = len(dims)
        self.create_array(name, dims, attrs)
        self.put_cells(name, [(tuple(r[:nd]), r[nd:]) for r in rows])


def flatten(bound: BoundArrPlan, cells: Dict[Tuple, Tuple]) -> ResultSet:
    """Canonical table form: dims then attrs, coordinate lexicographic order."""
    schema = deduped_schema(
        [(n, ValueKind.INT64) for n, _, _ in bound.dims] + [(n, k) for n, k in bound.attrs]
    )
    rows = [coords + tup for coords, tup in sorted(cells.items())]
    return ResultSet(schema, rows)

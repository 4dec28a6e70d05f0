"""Island compilers: SQL -> relational plan, AFL -> array plan, text spec ->
scan parameters. Compilation validates everything (unknown objects/columns,
type errors, aggregate misuse) so nothing can fail mid-execution.

Sources must already be plain object names; the planner replaces embedded
bdcast nodes with temp names before compiling the enclosing scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional

from .. import expr as ex
from ..engines import array as arr
from ..engines import relational as rel
from ..errors import PlanError
from ..model import Schema
from .ast import (
    AflAggregate,
    AflApply,
    AflFilter,
    AflProject,
    AflScan,
    AflSubarray,
    AggCall,
    CastNode,
    SelectStmt,
    TextSpec,
)


def _source_name(source) -> str:
    if isinstance(source, CastNode):
        raise PlanError("embedded bdcast must be planned before compilation")
    return source


def _labels_for(schema: Schema, qualifier: str) -> List[ex.ColLabel]:
    return [ex.ColLabel(qualifier, n, k) for n, k in schema.fields]


def _resolvable(col: ex.Col, labels) -> bool:
    try:
        ex.resolve_col(col, labels)
        return True
    except PlanError:
        return False


def compile_rel(stmt: SelectStmt, resolve_schema: Callable[[str], Schema]):
    """SQL subset -> relational engine plan (validated)."""
    base_name = _source_name(stmt.base.source)
    quals = [stmt.base.qualifier()]
    plan = rel.Scan(base_name, stmt.base.qualifier())
    labels = _labels_for(resolve_schema(base_name), stmt.base.qualifier())

    for j in stmt.joins:
        qual = j.table.qualifier()
        if qual in quals:
            raise PlanError(f"duplicate table alias {qual!r}")
        quals.append(qual)
        name = _source_name(j.table.source)
        right = rel.Scan(name, qual)
        right_labels = _labels_for(resolve_schema(name), qual)
        if _resolvable(j.left, labels) and _resolvable(j.right, right_labels):
            lcol, rcol = j.left, j.right
        elif _resolvable(j.right, labels) and _resolvable(j.left, right_labels):
            lcol, rcol = j.right, j.left
        else:
            raise PlanError(
                "join condition must relate the joined table to the preceding tables"
            )
        plan = rel.Join(plan, right, (lcol,), (rcol,))
        labels = labels + right_labels

    if stmt.where is not None:
        plan = rel.Filter(plan, stmt.where)

    has_agg = bool(stmt.group_by) or (
        stmt.items is not None and any(isinstance(i.value, AggCall) for i in stmt.items)
    )

    if has_agg:
        plan, out_names = _compile_aggregate(stmt, plan, labels)
        post_keys = _order_keys_in_output(stmt, out_names)
        if stmt.order_by and post_keys is None:
            raise PlanError("ORDER BY of an aggregate query must use output column names")
        if post_keys:
            plan = rel.Sort(plan, tuple(post_keys))
    elif stmt.items is None:
        # SELECT *: no projection; sort directly over the input labels
        if stmt.order_by:
            keys = tuple((c, d) for c, d in stmt.order_by)
            for c, _ in keys:
                ex.resolve_col(c, labels)
            plan = rel.Sort(plan, keys)
    else:
        proj_items, out_names = [], []
        for i, item in enumerate(stmt.items):
            name = item.alias or (
                item.value.name if isinstance(item.value, ex.Col) else f"col{i + 1}"
            )
            proj_items.append((name, item.value))
            out_names.append(name)
        post_keys = _order_keys_in_output(stmt, out_names)
        if post_keys is not None:
            plan = rel.Project(plan, tuple(proj_items))
            if post_keys:
                plan = rel.Sort(plan, tuple(post_keys))
        else:
            # keys not all projected: sort the pre-projection stream instead
            for c, _ in stmt.order_by:
                ex.resolve_col(c, labels)
            plan = rel.Sort(plan, tuple(stmt.order_by))
            plan = rel.Project(plan, tuple(proj_items))

    if stmt.limit is not None:
        plan = rel.Limit(plan, stmt.limit)

    rel.bind_plan(plan, resolve_schema)  # surface every plan error now
    return plan


def _compile_aggregate(stmt: SelectStmt, plan, labels):
    if stmt.items is None:
        raise PlanError("SELECT * cannot be combined with GROUP BY or aggregates")
    group_idx = [ex.resolve_col(c, labels) for c in stmt.group_by]
    taken = {labels[i].name for i in group_idx}
    agg_specs, agg_labels = [], {}
    for item in stmt.items:
        if isinstance(item.value, AggCall):
            base = item.alias or item.value.fn
            label, n = base, 2
            while label in taken:
                label = f"{base}_{n}"
                n += 1
            taken.add(label)
            agg_specs.append(rel.AggSpec(item.value.fn, item.value.arg, label))
            agg_labels[id(item)] = label
        else:
            if not isinstance(item.value, ex.Col):
                raise PlanError(
                    "non-aggregated select expressions must be plain grouped columns"
                )
            idx = ex.resolve_col(item.value, labels)
            if idx not in group_idx:
                raise PlanError(
                    f"column {item.value.name!r} must appear in GROUP BY or inside an aggregate"
                )
    if not agg_specs and not stmt.group_by:
        raise PlanError("aggregate query needs an aggregate function or GROUP BY")
    if not agg_specs:
        # pure GROUP BY projection: count(*) keeps the engine node well-formed,
        # then the projection drops it
        agg_specs.append(rel.AggSpec("count", None, "__group_marker"))
    node = rel.Aggregate(plan, tuple(stmt.group_by), tuple(agg_specs))
    proj_items, out_names = [], []
    for item in stmt.items:
        if isinstance(item.value, AggCall):
            out = item.alias or item.value.fn
            proj_items.append((out, ex.Col(agg_labels[id(item)])))
        else:
            out = item.alias or item.value.name
            proj_items.append((out, ex.Col(item.value.name, item.value.qualifier)))
        out_names.append(out)
    return rel.Project(node, tuple(proj_items)), out_names


def _order_keys_in_output(stmt: SelectStmt, out_names) -> Optional[list]:
    """Sort keys rewritten against projected names, or None if any falls outside."""
    if not stmt.order_by:
        return []
    keys = []
    lowered = [n.lower() for n in out_names]
    for col, desc in stmt.order_by:
        if col.qualifier is not None or lowered.count(col.name) != 1:
            return None
        keys.append((ex.Col(col.name), desc))
    return keys


def compile_arr(node, resolve_array):
    """AFL subset -> array engine plan (validated)."""
    plan = _arr_plan(node)
    arr.bind_plan(plan, resolve_array)
    return plan


def _arr_plan(node):
    if isinstance(node, AflScan):
        return arr.Scan(_source_name(node.source))
    if isinstance(node, AflFilter):
        return arr.Filter(_arr_plan(node.input), node.predicate)
    if isinstance(node, AflSubarray):
        return arr.Subarray(_arr_plan(node.input), node.bounds)
    if isinstance(node, AflProject):
        return arr.Project(_arr_plan(node.input), node.attrs)
    if isinstance(node, AflApply):
        return arr.Apply(_arr_plan(node.input), node.name, node.value)
    if isinstance(node, AflAggregate):
        return arr.Aggregate(_arr_plan(node.input), node.fn, node.attr, node.dims)
    raise PlanError(f"unknown AFL node {node!r}")


@dataclass(frozen=True)
class TextScanParams:
    table: str
    start: Optional[str]
    end: Optional[str]
    pattern: Optional[str]
    latest_only: bool


def compile_text(spec: TextSpec) -> TextScanParams:
    """Text island JSON spec -> engine scan parameters."""
    return TextScanParams(
        table=_source_name(spec.table),
        start=spec.start,
        end=spec.end,
        pattern=spec.pattern,
        latest_only=spec.latest_only,
    )

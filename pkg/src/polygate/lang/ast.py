"""ASTs for the polystore scoping grammar and the three island dialects.

Nodes are frozen dataclasses so structural equality works directly; the
pretty printers below emit a canonical text form that reparses to an
identical tree (expressions come out fully parenthesized).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .. import expr as ex

SCOPE_BY_ISLAND = {"relational": "bdrel", "array": "bdarray", "text": "bdtext"}
ISLAND_BY_SCOPE = {v: k for k, v in SCOPE_BY_ISLAND.items()}


@dataclass(frozen=True)
class MappingSpec:
    """bdcast destination spec: `*` or grouped column lists.

    primary holds relational fields, array dims, or the single text row
    column; secondary holds array attrs or text value columns.
    """

    star: bool = False
    primary: Tuple[str, ...] = ()
    secondary: Tuple[str, ...] = ()


@dataclass(frozen=True)
class CastNode:
    inner: "ScopedQuery"
    dest_name: str
    spec: MappingSpec
    dest_island: str


Source = Union[str, CastNode]  # where the grammar expects an object name


# -- relational island (SQL subset) -----------------------------------------

@dataclass(frozen=True)
class AggCall:
    fn: str  # count | sum | avg | min | max
    arg: Optional[ex.Expr]  # None means count(*)


@dataclass(frozen=True)
class SelectItem:
    value: Union[ex.Expr, AggCall]
    alias: Optional[str] = None


@dataclass(frozen=True)
class TableRef:
    source: Source
    alias: Optional[str] = None

    def qualifier(self) -> str:
        if self.alias:
            return self.alias
        return self.source if isinstance(self.source, str) else self.source.dest_name


@dataclass(frozen=True)
class JoinClause:
    table: TableRef
    left: ex.Col
    right: ex.Col


@dataclass(frozen=True)
class SelectStmt:
    items: Optional[Tuple[SelectItem, ...]]  # None means SELECT *
    base: TableRef
    joins: Tuple[JoinClause, ...] = ()
    where: Optional[ex.Expr] = None
    group_by: Tuple[ex.Col, ...] = ()
    order_by: Tuple[Tuple[ex.Col, bool], ...] = ()  # (column, descending)
    limit: Optional[int] = None


# -- array island (AFL subset) ----------------------------------------------

@dataclass(frozen=True)
class AflScan:
    source: Source


@dataclass(frozen=True)
class AflFilter:
    input: object
    predicate: ex.Expr


@dataclass(frozen=True)
class AflSubarray:
    input: object
    bounds: Tuple[int, ...]


@dataclass(frozen=True)
class AflProject:
    input: object
    attrs: Tuple[str, ...]


@dataclass(frozen=True)
class AflApply:
    input: object
    name: str
    value: ex.Expr


@dataclass(frozen=True)
class AflAggregate:
    input: object
    fn: str
    attr: Optional[str]  # None means count(*)
    dims: Tuple[str, ...] = ()


# -- text island (JSON scan spec) --------------------------------------------

@dataclass(frozen=True)
class TextSpec:
    table: Source
    start: Optional[str] = None
    end: Optional[str] = None
    pattern: Optional[str] = None
    latest_only: bool = False


# -- the polystore wrapper ----------------------------------------------------

@dataclass(frozen=True)
class ScopedQuery:
    island: str  # relational | array | text
    body: object  # SelectStmt | afl node | TextSpec

    def casts(self):
        """Casts embedded directly in this scope's body (not inside inner scopes)."""
        out = []

        def from_source(src):
            if isinstance(src, CastNode):
                out.append(src)

        b = self.body
        if isinstance(b, SelectStmt):
            from_source(b.base.source)
            for j in b.joins:
                from_source(j.table.source)
        elif isinstance(b, TextSpec):
            from_source(b.table)
        else:
            node = b
            while not isinstance(node, AflScan):
                node = node.input
            from_source(node.source)
        return out


@dataclass(frozen=True)
class PolyQuery:
    root: ScopedQuery


def map_sources(scoped: ScopedQuery, f) -> ScopedQuery:
    """Rebuild a scope with every object-name position src replaced by f(src).

    Only this scope's own source positions are touched; inner scopes inside
    casts are left to the caller's recursion.
    """
    b = scoped.body
    if isinstance(b, SelectStmt):
        base = TableRef(f(b.base.source), b.base.alias)
        joins = tuple(
            JoinClause(TableRef(f(j.table.source), j.table.alias), j.left, j.right)
            for j in b.joins
        )
        body = SelectStmt(b.items, base, joins, b.where, b.group_by, b.order_by, b.limit)
    elif isinstance(b, TextSpec):
        body = TextSpec(f(b.table), b.start, b.end, b.pattern, b.latest_only)
    else:

        def walk(node):
            if isinstance(node, AflScan):
                return AflScan(f(node.source))
            if isinstance(node, AflFilter):
                return AflFilter(walk(node.input), node.predicate)
            if isinstance(node, AflSubarray):
                return AflSubarray(walk(node.input), node.bounds)
            if isinstance(node, AflProject):
                return AflProject(walk(node.input), node.attrs)
            if isinstance(node, AflApply):
                return AflApply(walk(node.input), node.name, node.value)
            return AflAggregate(walk(node.input), node.fn, node.attr, node.dims)

        body = walk(b)
    return ScopedQuery(scoped.island, body)


# ---------------------------------------------------------------------------
# canonical pretty printers
# ---------------------------------------------------------------------------

def render_poly(q: PolyQuery) -> str:
    return render_scoped(q.root)


def render_scoped(s: ScopedQuery) -> str:
    if s.island == "relational":
        body = render_select(s.body)
    elif s.island == "array":
        body = render_afl(s.body)
    else:
        body = render_text_spec(s.body)
    return f"{SCOPE_BY_ISLAND[s.island]}({body})"


def render_cast(c: CastNode) -> str:
    spec = render_spec(c.spec)
    return f"bdcast({render_scoped(c.inner)}, {c.dest_name}, {spec}, {c.dest_island})"


def render_spec(spec: MappingSpec) -> str:
    if spec.star:
        return "*"
    inner = ", ".join(spec.primary)
    if spec.secondary:
        inner += " ; " + ", ".join(spec.secondary)
    return f"({inner})"


def _render_source(src: Source) -> str:
    return src if isinstance(src, str) else render_cast(src)


def render_select(s: SelectStmt) -> str:
    parts = ["SELECT "]
    if s.items is None:
        parts.append("*")
    else:
        rendered = []
        for item in s.items:
            if isinstance(item.value, AggCall):
                arg = "*" if item.value.arg is None else ex.render(item.value.arg)
                txt = f"{item.value.fn}({arg})"
            else:
                txt = ex.render(item.value)
            if item.alias:
                txt += f" AS {item.alias}"
            rendered.append(txt)
        parts.append(", ".join(rendered))
    parts.append(f" FROM {_render_table_ref(s.base)}")
    for j in s.joins:
        parts.append(
            f" JOIN {_render_table_ref(j.table)} ON {ex.render(j.left)} = {ex.render(j.right)}"
        )
    if s.where is not None:
        parts.append(f" WHERE {ex.render(s.where)}")
    if s.group_by:
        parts.append(" GROUP BY " + ", ".join(ex.render(c) for c in s.group_by))
    if s.order_by:
        keys = ", ".join(
            ex.render(c) + (" DESC" if desc else " ASC") for c, desc in s.order_by
        )
        parts.append(" ORDER BY " + keys)
    if s.limit is not None:
        parts.append(f" LIMIT {s.limit}")
    return "".join(parts)


def _render_table_ref(ref: TableRef) -> str:
    txt = _render_source(ref.source)
    if ref.alias:
        txt += f" {ref.alias}"
    return txt


def render_afl(node) -> str:
    if isinstance(node, AflScan):
        return f"scan({_render_source(node.source)})"
    if isinstance(node, AflFilter):
        return f"filter({render_afl(node.input)}, {ex.render(node.predicate)})"
    if isinstance(node, AflSubarray):
        bounds = ", ".join(str(b) for b in node.bounds)
        return f"subarray({render_afl(node.input)}, {bounds})"
    if isinstance(node, AflProject):
        return f"project({render_afl(node.input)}, {', '.join(node.attrs)})"
    if isinstance(node, AflApply):
        return f"apply({render_afl(node.input)}, {node.name}, {ex.render(node.value)})"
    if isinstance(node, AflAggregate):
        arg = "*" if node.attr is None else node.attr
        txt = f"aggregate({render_afl(node.input)}, {node.fn}({arg})"
        if node.dims:
            txt += ", " + ", ".join(node.dims)
        return txt + ")"
    raise ValueError(f"cannot render {node!r}")


def render_text_spec(t: TextSpec) -> str:
    parts = ['"op": "scan"']
    if isinstance(t.table, CastNode):
        parts.append(f'"table": {render_cast(t.table)}')
    else:
        parts.append(f'"table": {json.dumps(t.table)}')
    if t.start is not None or t.end is not None:
        rng = []
        if t.start is not None:
            rng.append(f'"start": {json.dumps(t.start)}')
        if t.end is not None:
            rng.append(f'"end": {json.dumps(t.end)}')
        parts.append('"range": {' + ", ".join(rng) + "}")
    if t.pattern is not None:
        parts.append(f'"pattern": {json.dumps(t.pattern)}')
    if t.latest_only:
        parts.append('"latest_only": true')
    return "{" + ", ".join(parts) + "}"

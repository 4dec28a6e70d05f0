"""Shared expression AST used by the relational and array islands.

Expressions are parsed by polygate.lang, then bound against a label table
(list of ColLabel) which resolves column references to row positions and
type-checks the tree. Binding errors are PlanError; evaluation never raises.

Evaluation semantics:
  - any comparison involving Null is false
  - arithmetic on a Null operand yields Null; division by zero yields Null;
    a NaN result collapses to Null (keeps the value domain totally ordered)
  - '/' always yields Float64; +,-,* stay Int64 only when both sides are
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

from .errors import PlanError
from .model import ValueKind, kind_of, render_value

BOOL = "bool"  # expression-level type, not a storable value kind

COMPARISONS = {"=", "!=", "<", "<=", ">", ">=" }
ARITHMETIC = {"+", "-", "*", "/"}


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Lit(Expr):
    value: object  # int | float | str


@dataclass(frozen=True)
class Col(Expr):
    name: str
    qualifier: Optional[str] = None


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # '-' | 'not'
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class ColLabel:
    """One column of a plan node's output: optional qualifier, name, kind."""

    qualifier: Optional[str]
    name: str
    kind: ValueKind


@dataclass(frozen=True)
class Bound:
    """Type-checked expression compiled to a row -> value closure."""

    kind: object  # ValueKind or BOOL
    eval: Callable = field(compare=False)


def resolve_col(col: Col, labels: List[ColLabel]) -> int:
    matches = [
        i
        for i, lab in enumerate(labels)
        if lab.name == col.name and (col.qualifier is None or lab.qualifier == col.qualifier)
    ]
    shown = f"{col.qualifier}.{col.name}" if col.qualifier else col.name
    if not matches:
        raise PlanError(f"unknown column {shown!r}")
    if len(matches) > 1:
        raise PlanError(f"ambiguous column {shown!r}")
    return matches[0]


def _is_numeric(t) -> bool:
    return t in (ValueKind.INT64, ValueKind.FLOAT64)


def _cmp_eval(op: str):
    if op == "=":
        return lambda a, b: a == b
    if op == "!=":
        return lambda a, b: a != b
    if op == "<":
        return lambda a, b: a < b
    if op == "<=":
        return lambda a, b: a <= b
    if op == ">":
        return lambda a, b: a > b
    return lambda a, b: a >= b


def _arith(op: str, int_result: bool):
    def run(a, b):
        if a is None or b is None:
            return None
        if op == "+":
            r = a + b
        elif op == "-":
            r = a - b
        elif op == "*":
            r = a * b
        else:
            if b == 0:
                return None
            r = a / b
        if not int_result:
            r = float(r)
        if isinstance(r, float) and math.isnan(r):
            return None
        return r

    return run


def bind(expr: Expr, labels: List[ColLabel]) -> Bound:
    """Resolve columns, type-check, and compile to an evaluator over row tuples."""
    if isinstance(expr, Lit):
        k = kind_of(expr.value)
        if k is None:
            raise PlanError("null literal is not supported")
        v = expr.value
        return Bound(k, lambda row: v)
    if isinstance(expr, Col):
        idx = resolve_col(expr, labels)
        return Bound(labels[idx].kind, lambda row: row[idx])
    if isinstance(expr, Unary):
        operand = bind(expr.operand, labels)
        if expr.op == "not":
            if operand.kind is not BOOL:
                raise PlanError("NOT requires a boolean operand")
            f = operand.eval
            return Bound(BOOL, lambda row: not f(row))
        if not _is_numeric(operand.kind):
            raise PlanError("unary '-' requires a numeric operand")
        f = operand.eval

        def run_neg(row, f=f):
            v = f(row)
            return None if v is None else -v

        return Bound(operand.kind, run_neg)
    if isinstance(expr, Binary):
        left = bind(expr.left, labels)
        right = bind(expr.right, labels)
        lf, rf = left.eval, right.eval
        op = expr.op
        if op in ("and", "or"):
            if left.kind is not BOOL or right.kind is not BOOL:
                raise PlanError(f"{op.upper()} requires boolean operands")
            if op == "and":
                return Bound(BOOL, lambda row: lf(row) and rf(row))
            return Bound(BOOL, lambda row: lf(row) or rf(row))
        if op in COMPARISONS:
            lk, rk = left.kind, right.kind
            if lk is BOOL or rk is BOOL:
                raise PlanError("cannot compare boolean expressions")
            ok = (lk == rk) or (_is_numeric(lk) and _is_numeric(rk))
            if not ok:
                raise PlanError(f"cannot compare {lk} with {rk}")
            cmpf = _cmp_eval(op)

            def run_cmp(row, lf=lf, rf=rf, cmpf=cmpf):
                a, b = lf(row), rf(row)
                if a is None or b is None:
                    return False
                return cmpf(a, b)

            return Bound(BOOL, run_cmp)
        if op in ARITHMETIC:
            if not (_is_numeric(left.kind) and _is_numeric(right.kind)):
                raise PlanError(f"arithmetic requires numeric operands, got {left.kind}/{right.kind}")
            both_int = left.kind == ValueKind.INT64 and right.kind == ValueKind.INT64
            kind = ValueKind.FLOAT64 if (op == "/" or not both_int) else ValueKind.INT64
            arith = _arith(op, int_result=(kind == ValueKind.INT64))
            return Bound(kind, lambda row: arith(lf(row), rf(row)))
        raise PlanError(f"unknown operator {op!r}")
    raise PlanError(f"unknown expression node {expr!r}")


def value_kind_of(expr: Expr, labels: List[ColLabel]) -> ValueKind:
    """Like bind().kind but insisting the result is a storable value kind."""
    kind = bind(expr, labels).kind
    if kind is BOOL:
        raise PlanError("boolean expression not allowed here")
    return kind


def render(expr: Expr) -> str:
    """Canonical text form; fully parenthesized so reparsing is structural identity."""
    if isinstance(expr, Lit):
        if isinstance(expr.value, str):
            return "'" + expr.value.replace("'", "''") + "'"
        return render_value(expr.value)
    if isinstance(expr, Col):
        return f"{expr.qualifier}.{expr.name}" if expr.qualifier else expr.name
    if isinstance(expr, Unary):
        op = "NOT " if expr.op == "not" else "-"
        return f"({op}{render(expr.operand)})"
    if isinstance(expr, Binary):
        op = expr.op.upper() if expr.op in ("and", "or") else expr.op
        return f"({render(expr.left)} {op} {render(expr.right)})"
    raise ValueError(f"cannot render {expr!r}")


def columns_in(expr: Expr) -> List[Col]:
    out: List[Col] = []

    def walk(e):
        if isinstance(e, Col):
            out.append(e)
        elif isinstance(e, Unary):
            walk(e.operand)
        elif isinstance(e, Binary):
            walk(e.left)
            walk(e.right)

    walk(expr)
    return out

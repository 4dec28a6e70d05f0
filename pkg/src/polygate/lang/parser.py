"""Parser for the polystore grammar: bdrel(SQL), bdarray(AFL), bdtext(JSON spec),
with bdcast(...) allowed wherever an island expects an object name.

The tokenizer is lazy so a ParseError always points at the first position the
parser could not accept, with the offending token attached. Keywords are
case-insensitive; identifiers are case-insensitive and stored lowercase.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from .. import expr as ex
from ..errors import ParseError
from ..model import IDENT_RE, MAX_IDENT_LEN
from .ast import (
    AflAggregate,
    AflApply,
    AflFilter,
    AflProject,
    AflScan,
    AflSubarray,
    AggCall,
    CastNode,
    ISLAND_BY_SCOPE,
    JoinClause,
    MappingSpec,
    PolyQuery,
    ScopedQuery,
    SelectItem,
    SelectStmt,
    TableRef,
    TextSpec,
)

RESERVED = {
    "bdrel", "bdarray", "bdtext", "bdcast",
    "select", "from", "join", "on", "where", "group", "by",
    "order", "asc", "desc", "limit", "as", "and", "or", "not",
}

AGG_FNS = ("count", "sum", "avg", "min", "max")
AFL_OPS = ("scan", "filter", "subarray", "project", "apply", "aggregate")
ISLANDS = ("relational", "array", "text")

_PUNCT_2 = ("<=", ">=", "!=")
_PUNCT_1 = "(){}[],;:.*=<>+-/"

_ASCII_LETTERS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
_ASCII_DIGITS = set("0123456789")


def _is_digit(c: str) -> bool:
    return c in _ASCII_DIGITS


def _is_ident_start(c: str) -> bool:
    return c in _ASCII_LETTERS or c == "_"


def _is_ident_char(c: str) -> bool:
    return c in _ASCII_LETTERS or c in _ASCII_DIGITS or c == "_"


class Token:
    __slots__ = ("kind", "text", "value", "line", "col")

    def __init__(self, kind, text, value, line, col):
        self.kind = kind  # IDENT INT FLOAT SQSTR DQSTR PUNCT EOF
        self.text = text
        self.value = value
        self.line = line
        self.col = col

    def shown(self):
        return "end of input" if self.kind == "EOF" else self.text


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1
        self.last_line = 1
        self.last_col = 1

    def _bump(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _error(self, msg, line=None, col=None, token_text=None):
        raise ParseError(
            msg,
            line if line is not None else self.line,
            col if col is not None else self.col,
            token_text if token_text is not None else self.text[self.pos : self.pos + 1] or "end of input",
        )

    def next_token(self) -> Token:
        text = self.text
        while self.pos < len(text) and text[self.pos] in " \t\r\n":
            self._bump()
        if self.pos < len(text):
            self.last_line, self.last_col = self.line, self.col
        if self.pos >= len(text):
            return Token("EOF", "", None, self.last_line, self.last_col)
        line, col = self.line, self.col
        c = text[self.pos]
        if _is_ident_start(c):
            start = self.pos
            while self.pos < len(text) and _is_ident_char(text[self.pos]):
                self._bump()
            word = text[start : self.pos]
            return Token("IDENT", word, word.lower(), line, col)
        if _is_digit(c):
            start = self.pos
            is_float = False
            while self.pos < len(text) and _is_digit(text[self.pos]):
                self._bump()
            if self.pos < len(text) and text[self.pos] == ".":
                is_float = True
                self._bump()
                while self.pos < len(text) and _is_digit(text[self.pos]):
                    self._bump()
            if self.pos < len(text) and text[self.pos] in "eE":
                save = self.pos
                self._bump()
                if self.pos < len(text) and text[self.pos] in "+-":
                    self._bump()
                if self.pos < len(text) and _is_digit(text[self.pos]):
                    is_float = True
                    while self.pos < len(text) and _is_digit(text[self.pos]):
                        self._bump()
                else:
                    # not an exponent after all (e.g. `1e` then garbage)
                    self.pos = save
                    self.line, self.col = line, col + (save - start)
            word = text[start : self.pos]
            if is_float:
                return Token("FLOAT", word, float(word), line, col)
            return Token("INT", word, int(word), line, col)
        if c == "'":
            start = self.pos
            self._bump()
            out = []
            while True:
                if self.pos >= len(text):
                    self._error("unterminated string literal", line, col, text[start : start + 8])
                ch = text[self.pos]
                if ch == "'":
                    if self.pos + 1 < len(text) and text[self.pos + 1] == "'":
                        out.append("'")
                        self._bump(2)
                        continue
                    self._bump()
                    break
                out.append(ch)
                self._bump()
            return Token("SQSTR", text[start : self.pos], "".join(out), line, col)
        if c == '"':
            start = self.pos
            self._bump()
            out = []
            while True:
                if self.pos >= len(text):
                    self._error("unterminated string literal", line, col, text[start : start + 8])
                ch = text[self.pos]
                if ch == '"':
                    self._bump()
                    break
                if ch == "\\":
                    if self.pos + 1 >= len(text):
                        self._error("unterminated string escape", line, col, "\\")
                    esc = text[self.pos + 1]
                    simple = {'"': '"', "\\": "\\", "/": "/", "b": "\b", "f": "\f", "n": "\n", "r": "\r", "t": "\t"}
                    if esc in simple:
                        out.append(simple[esc])
                        self._bump(2)
                        continue
                    if esc == "u":
                        hexpart = text[self.pos + 2 : self.pos + 6]
                        if len(hexpart) != 4 or any(h not in "0123456789abcdefABCDEF" for h in hexpart):
                            self._error("bad \\u escape", self.line, self.col, text[self.pos : self.pos + 6])
                        out.append(chr(int(hexpart, 16)))
                        self._bump(6)
                        continue
                    self._error(f"bad string escape \\{esc}", self.line, self.col, "\\" + esc)
                out.append(ch)
                self._bump()
            return Token("DQSTR", text[start : self.pos], "".join(out), line, col)
        two = text[self.pos : self.pos + 2]
        if two in _PUNCT_2:
            self._bump(2)
            return Token("PUNCT", two, two, line, col)
        if c in _PUNCT_1:
            self._bump()
            return Token("PUNCT", c, c, line, col)
        self._error(f"unexpected character {c!r}", line, col, c)


class Parser:
    def __init__(self, text: str):
        self._lexer = _Lexer(text)
        self._buf: List[Token] = []

    def peek(self, i: int = 0) -> Token:
        while len(self._buf) <= i:
            self._buf.append(self._lexer.next_token())
        return self._buf[i]

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self._buf.pop(0)
        return tok

    def error(self, msg: str, token: Optional[Token] = None):
        tok = token or self.peek()
        raise ParseError(msg, tok.line, tok.col, tok.shown())

    # -- token helpers ------------------------------------------------------

    def at_punct(self, p: str) -> bool:
        t = self.peek()
        return t.kind == "PUNCT" and t.text == p

    def expect_punct(self, p: str) -> Token:
        if not self.at_punct(p):
            self.error(f"expected {p!r}")
        return self.advance()

    def at_kw(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "IDENT" and t.value == word

    def expect_kw(self, word: str):
        if not self.at_kw(word):
            self.error(f"expected {word.upper()}")
        self.advance()

    def ident(self, what: str = "identifier") -> str:
        t = self.peek()
        if t.kind != "IDENT":
            self.error(f"expected {what}")
        if t.value in RESERVED:
            self.error(f"keyword {t.text!r} cannot be used as an {what}")
        if not IDENT_RE.match(t.text) or len(t.text) > MAX_IDENT_LEN:
            self.error(f"invalid {what}")
        self.advance()
        return t.value

    # -- grammar ------------------------------------------------------------

    def parse_poly(self) -> PolyQuery:
        scoped = self.parse_scoped()
        if self.peek().kind != "EOF":
            self.error("unexpected input after query")
        return PolyQuery(scoped)

    def parse_scoped(self) -> ScopedQuery:
        t = self.peek()
        if t.kind != "IDENT" or t.value not in ISLAND_BY_SCOPE:
            self.error("expected island scope (bdrel, bdarray or bdtext)")
        island = ISLAND_BY_SCOPE[t.value]
        self.advance()
        self.expect_punct("(")
        if island == "relational":
            body = self.parse_select()
        elif island == "array":
            body = self.parse_afl()
        else:
            body = self.parse_text_spec()
        self.expect_punct(")")
        return ScopedQuery(island, body)

    def parse_cast(self) -> CastNode:
        self.expect_kw("bdcast")
        self.expect_punct("(")
        inner = self.parse_scoped()
        self.expect_punct(",")
        name = self.ident("cast name")
        self.expect_punct(",")
        spec_tok = self.peek()
        spec = self.parse_spec()
        self.expect_punct(",")
        island_tok = self.peek()
        if island_tok.kind != "IDENT" or island_tok.value not in ISLANDS:
            self.error("expected destination island (relational, array or text)")
        island = island_tok.value
        self.advance()
        self.expect_punct(")")
        self._check_spec(spec, island, spec_tok)
        return CastNode(inner, name, spec, island)

    def parse_spec(self) -> MappingSpec:
        if self.at_punct("*"):
            self.advance()
            return MappingSpec(star=True)
        self.expect_punct("(")
        primary = self._ident_list()
        secondary: Tuple[str, ...] = ()
        if self.at_punct(";"):
            self.advance()
            secondary = self._ident_list()
        self.expect_punct(")")
        return MappingSpec(star=False, primary=primary, secondary=secondary)

    def _ident_list(self) -> Tuple[str, ...]:
        out = [self.ident("column name")]
        while self.at_punct(","):
            self.advance()
            out.append(self.ident("column name"))
        return tuple(out)

    def _check_spec(self, spec: MappingSpec, island: str, tok: Token):
        if spec.star:
            return
        if island == "relational":
            if spec.secondary:
                self.error("relational cast spec takes a single field list", tok)
        elif island == "array":
            if not spec.secondary:
                self.error("array cast spec needs (dims ; attrs)", tok)
        else:
            if len(spec.primary) != 1 or not spec.secondary:
                self.error("text cast spec needs (row_col ; value columns)", tok)

    # -- SQL subset -----------------------------------------------------------

    def parse_select(self) -> SelectStmt:
        self.expect_kw("select")
        if self.at_punct("*"):
            self.advance()
            items = None
        else:
            items = [self._select_item()]
            while self.at_punct(","):
                self.advance()
                items.append(self._select_item())
            items = tuple(items)
        self.expect_kw("from")
        base = self._table_ref()
        joins = []
        while self.at_kw("join"):
            self.advance()
            table = self._table_ref()
            self.expect_kw("on")
            left = self._qcol()
            self.expect_punct("=")
            right = self._qcol()
            joins.append(JoinClause(table, left, right))
        where = None
        if self.at_kw("where"):
            self.advance()
            where = self.parse_expr()
        group_by: Tuple[ex.Col, ...] = ()
        if self.at_kw("group"):
            self.advance()
            self.expect_kw("by")
            cols = [self._qcol()]
            while self.at_punct(","):
                self.advance()
                cols.append(self._qcol())
            group_by = tuple(cols)
        order_by = []
        if self.at_kw("order"):
            self.advance()
            self.expect_kw("by")
            order_by.append(self._order_key())
            while self.at_punct(","):
                self.advance()
                order_by.append(self._order_key())
        limit = None
        if self.at_kw("limit"):
            self.advance()
            t = self.peek()
            if t.kind != "INT":
                self.error("expected a non-negative integer after LIMIT")
            limit = t.value
            self.advance()
        return SelectStmt(items, base, tuple(joins), where, group_by, tuple(order_by), limit)

    def _select_item(self) -> SelectItem:
        t = self.peek()
        if t.kind == "IDENT" and t.value in AGG_FNS and self.peek(1).kind == "PUNCT" and self.peek(1).text == "(":
            fn = t.value
            self.advance()
            self.advance()  # '('
            if self.at_punct("*"):
                self.advance()
                arg = None
            else:
                arg = self.parse_expr()
            self.expect_punct(")")
            value = AggCall(fn, arg)
        else:
            value = self.parse_expr()
        alias = self._opt_alias()
        return SelectItem(value, alias)

    def _opt_alias(self) -> Optional[str]:
        if self.at_kw("as"):
            self.advance()
            return self.ident("alias")
        t = self.peek()
        if t.kind == "IDENT" and t.value not in RESERVED:
            return self.ident("alias")
        return None

    def _table_ref(self) -> TableRef:
        if self.at_kw("bdcast"):
            source = self.parse_cast()
        else:
            source = self.ident("table name")
        alias = self._opt_alias()
        return TableRef(source, alias)

    def _qcol(self) -> ex.Col:
        first = self.ident("column name")
        if self.at_punct("."):
            self.advance()
            return ex.Col(self.ident("column name"), first)
        return ex.Col(first)

    def _order_key(self) -> Tuple[ex.Col, bool]:
        col = self._qcol()
        desc = False
        if self.at_kw("asc"):
            self.advance()
        elif self.at_kw("desc"):
            self.advance()
            desc = True
        return (col, desc)

    # -- shared expression grammar ---------------------------------------------

    def parse_expr(self) -> ex.Expr:
        return self._or_expr()

    def _or_expr(self) -> ex.Expr:
        left = self._and_expr()
        while self.at_kw("or"):
            self.advance()
            left = ex.Binary("or", left, self._and_expr())
        return left

    def _and_expr(self) -> ex.Expr:
        left = self._not_expr()
        while self.at_kw("and"):
            self.advance()
            left = ex.Binary("and", left, self._not_expr())
        return left

    def _not_expr(self) -> ex.Expr:
        if self.at_kw("not"):
            self.advance()
            return ex.Unary("not", self._not_expr())
        return self._comparison()

    def _comparison(self) -> ex.Expr:
        left = self._additive()
        t = self.peek()
        if t.kind == "PUNCT" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            self.advance()
            return ex.Binary(t.text, left, self._additive())
        return left

    def _additive(self) -> ex.Expr:
        left = self._multiplicative()
        while self.peek().kind == "PUNCT" and self.peek().text in ("+", "-"):
            op = self.advance().text
            left = ex.Binary(op, left, self._multiplicative())
        return left

    def _multiplicative(self) -> ex.Expr:
        left = self._unary()
        while self.peek().kind == "PUNCT" and self.peek().text in ("*", "/"):
            op = self.advance().text
            left = ex.Binary(op, left, self._unary())
        return left

    def _unary(self) -> ex.Expr:
        if self.at_punct("-"):
            self.advance()
            return ex.Unary("-", self._unary())
        return self._primary()

    def _primary(self) -> ex.Expr:
        t = self.peek()
        if t.kind in ("INT", "FLOAT", "SQSTR"):
            self.advance()
            return ex.Lit(t.value)
        if self.at_punct("("):
            self.advance()
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner
        if t.kind == "IDENT" and t.value not in RESERVED:
            return self._qcol()
        self.error("expected an expression")

    # -- AFL subset --------------------------------------------------------------

    def parse_afl(self):
        t = self.peek()
        if t.kind != "IDENT" or t.value not in AFL_OPS:
            self.error("expected an array operator (scan, filter, subarray, project, apply, aggregate)")
        op = t.value
        self.advance()
        self.expect_punct("(")
        if op == "scan":
            if self.at_kw("bdcast"):
                source = self.parse_cast()
            else:
                source = self.ident("array name")
            self.expect_punct(")")
            return AflScan(source)
        inner = self.parse_afl()
        if op == "filter":
            self.expect_punct(",")
            pred = self.parse_expr()
            self.expect_punct(")")
            return AflFilter(inner, pred)
        if op == "subarray":
            bounds = []
            while self.at_punct(","):
                self.advance()
                bounds.append(self._signed_int())
            self.expect_punct(")")
            return AflSubarray(inner, tuple(bounds))
        if op == "project":
            attrs = []
            while self.at_punct(","):
                self.advance()
                attrs.append(self.ident("attribute name"))
            if not attrs:
                self.error("project needs at least one attribute")
            self.expect_punct(")")
            return AflProject(inner, tuple(attrs))
        if op == "apply":
            self.expect_punct(",")
            name = self.ident("attribute name")
            self.expect_punct(",")
            value = self.parse_expr()
            self.expect_punct(")")
            return AflApply(inner, name, value)
        # aggregate
        self.expect_punct(",")
        fn_tok = self.peek()
        if fn_tok.kind != "IDENT" or fn_tok.value not in AGG_FNS:
            self.error("expected an aggregate function (count, sum, avg, min, max)")
        fn = fn_tok.value
        self.advance()
        self.expect_punct("(")
        if self.at_punct("*"):
            self.advance()
            attr = None
        else:
            attr = self.ident("attribute name")
        self.expect_punct(")")
        dims = []
        while self.at_punct(","):
            self.advance()
            dims.append(self.ident("dimension name"))
        self.expect_punct(")")
        return AflAggregate(inner, fn, attr, tuple(dims))

    def _signed_int(self) -> int:
        neg = False
        if self.at_punct("-"):
            self.advance()
            neg = True
        t = self.peek()
        if t.kind != "INT":
            self.error("expected an integer bound")
        self.advance()
        return -t.value if neg else t.value

    # -- text island JSON spec ------------------------------------------------------

    def parse_text_spec(self) -> TextSpec:
        fields = self._json_object(
            allowed=("op", "table", "range", "pattern", "latest_only")
        )
        if "op" not in fields:
            self.error('text spec is missing "op"')
        if fields["op"] != "scan":
            self.error('text spec "op" must be "scan"')
        if "table" not in fields:
            self.error('text spec is missing "table"')
        start = end = None
        if "range" in fields:
            start = fields["range"].get("start")
            end = fields["range"].get("end")
        return TextSpec(
            table=fields["table"],
            start=start,
            end=end,
            pattern=fields.get("pattern"),
            latest_only=fields.get("latest_only", False),
        )

    def _json_object(self, allowed: Tuple[str, ...]) -> dict:
        self.expect_punct("{")
        out = {}
        if not self.at_punct("}"):
            while True:
                key_tok = self.peek()
                if key_tok.kind != "DQSTR":
                    self.error("expected a JSON object key")
                key = key_tok.value
                if key not in allowed:
                    self.error(f"unknown key {key!r}", key_tok)
                if key in out:
                    self.error(f"duplicate key {key!r}", key_tok)
                self.advance()
                self.expect_punct(":")
                out[key] = self._json_value(key)
                if self.at_punct(","):
                    self.advance()
                    continue
                break
        self.expect_punct("}")
        return out

    def _json_value(self, key: str):
        t = self.peek()
        if key == "op":
            if t.kind != "DQSTR":
                self.error('"op" must be a string')
            self.advance()
            return t.value
        if key == "table":
            if self.at_kw("bdcast"):
                return self.parse_cast()
            if t.kind != "DQSTR":
                self.error('"table" must be a string or bdcast(...)')
            if not IDENT_RE.match(t.value) or len(t.value) > MAX_IDENT_LEN:
                self.error(f"invalid table name {t.value!r}")
            self.advance()
            return t.value.lower()
        if key == "range":
            rng = self._json_object(allowed=("start", "end"))
            return rng
        if key in ("start", "end", "pattern"):
            if t.kind != "DQSTR":
                self.error(f'"{key}" must be a string')
            self.advance()
            return t.value
        if key == "latest_only":
            if t.kind == "IDENT" and t.text in ("true", "false"):
                self.advance()
                return t.text == "true"
            self.error('"latest_only" must be true or false')
        self.error(f"unknown key {key!r}")


def parse_poly(text: str) -> PolyQuery:
    """Parse a full polystore query; total: returns an AST or raises ParseError."""
    if not isinstance(text, str):
        raise ParseError("query must be text", 1, 1, "")
    return Parser(text).parse_poly()

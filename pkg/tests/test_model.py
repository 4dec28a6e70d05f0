import random

import pytest

from polygate.errors import CoerceError, SchemaMismatch
from polygate.model import (
    ResultSet,
    Schema,
    ValueKind,
    coerce,
    compare,
    normalize_ident,
    parse_csv,
    render_csv,
    render_value,
)
from instances import KINDS, random_value
from oracles import cmp_values


class TestCompare:
    def test_reflexive(self):
        assert compare(3, 3) == 0

    def test_null_sorts_first(self):
        assert compare(None, "a") == -1
        assert compare(None, -999) == -1
        assert compare(None, None) == 0

    def test_numeric_cross_kind(self):
        assert compare(2, 2.5) == -1
        assert compare(2.5, 2) == 1

    def test_int_before_float_on_ties(self):
        assert compare(2, 2.0) == -1
        assert compare(2.0, 2) == 1

    def test_numeric_band_below_text(self):
        assert compare(10**9, "") == -1
        assert compare("0", 999) == 1

    def test_total_order_properties(self):
        rng = random.Random(101)
        values = [random_value(rng, rng.choice(KINDS)) for _ in range(250)]
        for _ in range(3000):
            a, b, c = rng.choice(values), rng.choice(values), rng.choice(values)
            # antisymmetry + agreement with the independent comparison
            assert compare(a, b) == -compare(b, a)
            assert compare(a, b) == cmp_values(a, b)
            # transitivity
            if compare(a, b) <= 0 and compare(b, c) <= 0:
                assert compare(a, c) <= 0


class TestCoerce:
    def test_truncation_toward_zero(self):
        assert coerce(-2.7, ValueKind.INT64) == -2
        assert coerce(2.7, ValueKind.INT64) == 2

    def test_canonical_rendering(self):
        assert coerce(5, ValueKind.TEXT) == "5"
        assert coerce(1.5, ValueKind.TEXT) == "1.5"

    def test_unparseable_text(self):
        with pytest.raises(CoerceError):
            coerce("abc", ValueKind.INT64)
        with pytest.raises(CoerceError):
            coerce("abc", ValueKind.FLOAT64)
        with pytest.raises(CoerceError):
            coerce("inf", ValueKind.FLOAT64)

    def test_null_passthrough(self):
        for kind in KINDS:
            assert coerce(None, kind) is None

    def test_text_parses_decimal(self):
        assert coerce("-17", ValueKind.INT64) == -17
        assert coerce("2.5e1", ValueKind.FLOAT64) == 25.0

    def test_text_round_trip(self):
        rng = random.Random(7)
        for _ in range(500):
            v = random_value(rng, rng.choice([ValueKind.INT64, ValueKind.FLOAT64]), null_p=0)
            kind = ValueKind.INT64 if isinstance(v, int) else ValueKind.FLOAT64
            assert coerce(coerce(v, ValueKind.TEXT), kind) == v

    def test_float_round_trip_arbitrary(self):
        rng = random.Random(8)
        for _ in range(300):
            v = rng.uniform(-1e9, 1e9)
            assert coerce(render_value(v), ValueKind.FLOAT64) == v


class TestSchema:
    def test_identifier_grammar(self):
        assert normalize_ident("Foo_9") == "foo_9"
        with pytest.raises(SchemaMismatch):
            normalize_ident("9foo")
        with pytest.raises(SchemaMismatch):
            normalize_ident("a" * 65)
        with pytest.raises(SchemaMismatch):
            normalize_ident("a b")

    def test_case_insensitive_uniqueness(self):
        with pytest.raises(SchemaMismatch):
            Schema([("a", ValueKind.INT64), ("A", ValueKind.TEXT)])

    def test_row_conformance(self):
        s = Schema([("a", ValueKind.INT64)])
        with pytest.raises(SchemaMismatch):
            ResultSet(s, [["x"]])
        with pytest.raises(SchemaMismatch):
            ResultSet(s, [[1, 2]])
        rs = ResultSet(s, [[1], [None]])
        assert rs.rows == ((1,), (None,))

    def test_describe_parse_round_trip(self):
        s = Schema([("a", ValueKind.INT64), ("b", ValueKind.FLOAT64), ("c", ValueKind.TEXT)])
        assert Schema.parse(s.describe()) == s


class TestCsv:
    def test_header_only(self):
        rs = ResultSet(Schema([("a", ValueKind.INT64)]))
        assert render_csv(rs) == "a\n"

    def test_quoting_rule(self):
        rs = ResultSet(
            Schema([("id", ValueKind.INT64), ("s", ValueKind.TEXT)]), [(1, "x,y")]
        )
        assert render_csv(rs) == 'id,s\n1,"x,y"\n'

    def test_null_rendering(self):
        rs = ResultSet(Schema([("a", ValueKind.INT64)]), [(None,)])
        assert render_csv(rs) == "a\n\n"

    def test_empty_text_vs_null(self):
        s = Schema([("t", ValueKind.TEXT)])
        rs = ResultSet(s, [("",), (None,)])
        assert render_csv(rs) == 't\n""\n\n'
        assert parse_csv(render_csv(rs), s) == [("",), (None,)]

    def test_embedded_newline_and_quote(self):
        s = Schema([("t", ValueKind.TEXT)])
        rs = ResultSet(s, [("a\nb",), ('say "hi"',)])
        assert parse_csv(render_csv(rs), s) == [("a\nb",), ('say "hi"',)]

    def test_round_trip_random(self):
        rng = random.Random(55)
        for _ in range(300):
            n_cols = rng.randint(1, 5)
            schema = Schema([(f"c{i}", rng.choice(KINDS)) for i in range(n_cols)])
            rows = [
                tuple(random_value(rng, k) for k in schema.kinds)
                for _ in range(rng.randint(0, 30))
            ]
            rs = ResultSet(schema, rows)
            assert parse_csv(render_csv(rs), schema) == list(rs.rows)

    def test_float_shortest_form(self):
        rs = ResultSet(Schema([("f", ValueKind.FLOAT64)]), [(4.0,), (0.1,)])
        assert render_csv(rs) == "f\n4.0\n0.1\n"

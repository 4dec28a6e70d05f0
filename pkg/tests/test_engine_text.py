import random

import pytest

from polygate.engines.text import KV_SCHEMA, TextEngine
from polygate.errors import DuplicateObject, InvalidRange, NoSuchObject

from instances import random_text_instance
from oracles import text_oracle


def make_engine(tmp_path=None):
    return TextEngine("kv1", str(tmp_path) if tmp_path else None)


def sample_entries():
    return [
        ("r1", "f", "q", 10, "alpha"),
        ("r2", "f", "q", 10, "beta sepsis"),
        ("r2", "f", "q", 20, "gamma"),
        ("r3", "f", "q", 10, "delta"),
    ]


class TestPut:
    def test_put_counts(self):
        e = make_engine()
        e.create_kv("t")
        assert e.put("t", sample_entries()[:3]) == 3

    def test_replace_on_full_key(self):
        e = make_engine()
        e.create_kv("t")
        e.put("t", [("r1", "f", "q", 10, "old")])
        e.put("t", [("r1", "f", "q", 10, "new")])
        rs = e.scan("t")
        assert list(rs.rows) == [("r1", "f", "q", 10, "new")]

    def test_put_missing_table(self):
        e = make_engine()
        with pytest.raises(NoSuchObject):
            e.put("missing", sample_entries())

    def test_duplicate_create(self):
        e = make_engine()
        e.create_kv("t")
        with pytest.raises(DuplicateObject):
            e.create_kv("t")


class TestScan:
    def test_full_scan_key_order(self):
        e = make_engine()
        e.create_kv("t")
        e.put("t", list(reversed(sample_entries())))
        rs = e.scan("t")
        assert rs.schema == KV_SCHEMA
        # key order: (row, colfam, colqual, descending ts)
        assert list(rs.rows) == [
            ("r1", "f", "q", 10, "alpha"),
            ("r2", "f", "q", 20, "gamma"),
            ("r2", "f", "q", 10, "beta sepsis"),
            ("r3", "f", "q", 10, "delta"),
        ]

    def test_empty_half_open_range(self):
        e = make_engine()
        e.create_kv("t")
        e.put("t", sample_entries())
        assert e.scan("t", start="b", end="b").rows == ()

    def test_invalid_range(self):
        e = make_engine()
        e.create_kv("t")
        with pytest.raises(InvalidRange):
            e.scan("t", start="z", end="a")

    def test_pattern_case_sensitive(self):
        e = make_engine()
        e.create_kv("t")
        e.put("t", sample_entries() + [("r4", "f", "q", 1, "SEPSIS")])
        rs = e.scan("t", pattern="sepsis")
        assert [r[0] for r in rs.rows] == ["r2"]

    def test_latest_only_max_ts(self):
        e = make_engine()
        e.create_kv("t")
        e.put("t", sample_entries())
        rs = e.scan("t", latest_only=True)
        assert [(r[0], r[3]) for r in rs.rows] == [("r1", 10), ("r2", 20), ("r3", 10)]

    def test_range_concatenation(self):
        rng = random.Random(3)
        for _ in range(50):
            entries, _ = random_text_instance(rng)
            e = make_engine()
            e.create_kv("t")
            e.put("t", entries)
            a, b, c = "r0", f"r{rng.randint(1, 8)}", "r9~"
            left = list(e.scan("t", start=a, end=b).rows)
            right = list(e.scan("t", start=b, end=c).rows)
            whole = list(e.scan("t", start=a, end=c).rows)
            assert left + right == whole

    def test_oracle_equivalence_sample(self):
        rng = random.Random(17)
        for _ in range(150):
            entries, kwargs = random_text_instance(rng)
            e = make_engine()
            e.create_kv("t")
            e.put("t", entries)
            expected = text_oracle(entries, **kwargs)
            assert list(e.scan("t", **kwargs).rows) == expected

    def test_latest_only_group_property(self):
        rng = random.Random(23)
        for _ in range(60):
            entries, _ = random_text_instance(rng)
            e = make_engine()
            e.create_kv("t")
            e.put("t", entries)
            rows = e.scan("t", latest_only=True).rows
            seen = {}
            for r in rows:
                key = (r[0], r[1], r[2])
                assert key not in seen
                seen[key] = r[3]
            for key, ts in seen.items():
                group = [e2[3] for e2 in entries if (e2[0], e2[1], e2[2]) == key]
                assert ts == max(group)


class TestSnapshots:
    def test_round_trip(self, tmp_path):
        e = make_engine(tmp_path)
        e.create_kv("t")
        e.put("t", sample_entries() + [("r9", "f", "q", 5, 'with "quote", comma\nand newline')])
        e.flush()
        snap1 = (tmp_path / "t.snap").read_text()
        assert snap1.startswith("POLYGATE-KV v1\n")
        e2 = make_engine(tmp_path)
        e2.load()
        assert e2.scan("t").rows == e.scan("t").rows
        e2.flush()
        assert (tmp_path / "t.snap").read_text() == snap1

import pytest

from polygate.catalog import Catalog, ENGINES_TABLE, ISLANDS_TABLE, OBJECTS_TABLE
from polygate.cluster import EngineHandle
from polygate.engines.relational import RelationalEngine, Scan
from polygate.errors import (
    DuplicateObject,
    EngineUnavailable,
    IslandKindMismatch,
    NoSuchEngine,
    NoSuchObject,
    SchemaMismatch,
)
from polygate.gateway import _EngineProxy


def make_catalog():
    engine = RelationalEngine("cat")
    cat = Catalog(engine)
    cat.bootstrap()
    return cat, engine


class TestBootstrap:
    def test_idempotent(self):
        cat, engine = make_catalog()
        cat.register_engine("rel1", "relational", "a:1")
        before = {
            t: list(engine.execute(Scan(t)).rows)
            for t in (ENGINES_TABLE, OBJECTS_TABLE, ISLANDS_TABLE)
        }
        cat.bootstrap()
        after = {
            t: list(engine.execute(Scan(t)).rows)
            for t in (ENGINES_TABLE, OBJECTS_TABLE, ISLANDS_TABLE)
        }
        assert before == after

    def test_three_islands(self):
        cat, _ = make_catalog()
        rows = cat.list_islands()
        assert len(rows) == 3
        assert {r[1] for r in rows} == {"bdrel", "bdarray", "bdtext"}

    def test_engine_down(self):
        engine = RelationalEngine("cat")
        handle = EngineHandle(engine, "cat:1")
        cat = Catalog(_EngineProxy(handle))
        handle.stop()
        with pytest.raises(EngineUnavailable):
            cat.bootstrap()


class TestEnginesAndObjects:
    def test_eids_strictly_increase(self):
        cat, _ = make_catalog()
        e1 = cat.register_engine("rel1", "relational", "a:1")
        e2 = cat.register_engine("arr1", "array", "a:2")
        assert e2 > e1

    def test_register_duplicate_engine(self):
        cat, _ = make_catalog()
        cat.register_engine("rel1", "relational", "a:1")
        with pytest.raises(DuplicateObject):
            cat.register_engine("rel1", "relational", "a:2")

    def test_island_kind_mismatch(self):
        cat, _ = make_catalog()
        cat.register_engine("arr1", "array", "a:2")
        with pytest.raises(IslandKindMismatch):
            cat.register_object("vitals", "patient_id,t,hr", "arr1", "relational")

    def test_register_resolve_deregister(self):
        cat, _ = make_catalog()
        eid = cat.register_engine("rel1", "relational", "a:1")
        oid = cat.register_object("patients", "id,name", "rel1", "relational")
        obj, eng = cat.resolve("patients")
        assert obj.oid == oid and obj.fields == "id,name" and not obj.is_temp
        assert eng.eid == eid and eng.kind == "relational"
        cat.deregister_object("patients")
        with pytest.raises(NoSuchObject):
            cat.resolve("patients")

    def test_resolve_unknown(self):
        cat, _ = make_catalog()
        with pytest.raises(NoSuchObject):
            cat.resolve("ghost")

    def test_duplicate_object_name(self):
        cat, _ = make_catalog()
        cat.register_engine("rel1", "relational", "a:1")
        cat.register_object("t", "a", "rel1", "relational")
        with pytest.raises(DuplicateObject):
            cat.register_object("t", "b", "rel1", "relational")

    def test_reserved_prefix_rejected(self):
        cat, _ = make_catalog()
        cat.register_engine("rel1", "relational", "a:1")
        with pytest.raises(SchemaMismatch):
            cat.register_object("__bd_sneaky", "a", "rel1", "relational")
        # temps with the temp prefix are fine
        cat.register_object("__bdtemp_q_0", "a", "rel1", "relational", is_temp=True)

    def test_temp_lifecycle(self):
        cat, _ = make_catalog()
        cat.register_engine("rel1", "relational", "a:1")
        cat.register_object("__bdtemp_q_1", "a", "rel1", "relational", is_temp=True)
        obj, _ = cat.resolve("__bdtemp_q_1")
        assert obj.is_temp
        cat.deregister_object("__bdtemp_q_1")
        with pytest.raises(NoSuchObject):
            cat.resolve("__bdtemp_q_1")

    def test_no_such_engine(self):
        cat, _ = make_catalog()
        with pytest.raises(NoSuchEngine):
            cat.register_object("t", "a", "ghost", "relational")

    def test_island_matches_engine_kind_invariant(self):
        cat, _ = make_catalog()
        cat.register_engine("rel1", "relational", "a:1")
        cat.register_engine("arr1", "array", "a:2")
        cat.register_object("t", "a", "rel1", "relational")
        cat.register_object("v", "i,x", "arr1", "array")
        engines = {e.eid: e for e in cat.list_engines()}
        for obj in cat.list_objects():
            assert engines[obj.engine_id].kind == obj.island

    def test_oids_monotone_across_deregistration(self):
        cat, _ = make_catalog()
        cat.register_engine("rel1", "relational", "a:1")
        o1 = cat.register_object("t1", "a", "rel1", "relational")
        o2 = cat.register_object("t2", "a", "rel1", "relational")
        cat.deregister_object("t2")
        o3 = cat.register_object("t3", "a", "rel1", "relational")
        assert o1 < o2 < o3


class TestStateInEngine:
    def test_catalog_reconstructible_from_tables(self):
        """All catalog state must live in the reserved tables."""
        cat, engine = make_catalog()
        cat.register_engine("rel1", "relational", "a:1")
        cat.register_object("t", "a,b", "rel1", "relational")
        cat.set_engine_status("rel1", "down")
        # a second Catalog over the same engine sees the identical state
        cat2 = Catalog(engine)
        cat2.bootstrap()
        assert cat2.list_engines() == cat.list_engines()
        assert cat2.list_objects() == cat.list_objects()
        assert cat2.get_engine("rel1").status == "down"

    def test_status_update(self):
        cat, _ = make_catalog()
        cat.register_engine("rel1", "relational", "a:1")
        assert cat.get_engine("rel1").status == "up"
        cat.set_engine_status("rel1", "down")
        assert cat.get_engine("rel1").status == "down"

    def test_ensure_engine_idempotent(self):
        cat, _ = make_catalog()
        eid = cat.ensure_engine("rel1", "relational", "a:1")
        assert cat.ensure_engine("rel1", "relational", "a:9") == eid
        assert cat.get_engine("rel1").address == "a:9"
        with pytest.raises(IslandKindMismatch):
            cat.ensure_engine("rel1", "array", "a:1")

import json
import random

import pytest

from polygate.errors import BindError, ConfigError
from polygate.gateway import GatewayService, parse_config, serve

from conftest import THREE_ENGINES, make_service
from instances import fuzz_input


def load_demo(http, base, **kw):
    body = {"seed": 1, "patients": 5, "waveform_len": 10, "notes": 8}
    body.update(kw)
    code, raw, _ = http.post_json(base, "/admin/load", body)
    assert code == 200, raw
    return json.loads(raw)


class TestConfig:
    def test_minimal_valid(self, tmp_path):
        cfg = parse_config(THREE_ENGINES.format(base=tmp_path), str(tmp_path))
        assert cfg.catalog_engine == "rel1"
        assert len(cfg.engines) == 3
        assert cfg.listen_port == 0

    def test_duplicate_engine_names(self, tmp_path):
        text = THREE_ENGINES.format(base=tmp_path) + "\n[engine:rel1]\nkind = relational\naddress = x:1\n"
        with pytest.raises(ConfigError):
            parse_config(text, str(tmp_path))

    def test_duplicate_addresses(self, tmp_path):
        text = THREE_ENGINES.format(base=tmp_path).replace("arr1.local:5402", "rel1.local:5401")
        with pytest.raises(ConfigError):
            parse_config(text, str(tmp_path))

    def test_catalog_engine_must_be_relational(self, tmp_path):
        text = THREE_ENGINES.format(base=tmp_path).replace("catalog_engine = rel1", "catalog_engine = arr1")
        with pytest.raises(ConfigError):
            parse_config(text, str(tmp_path))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config("listen = a:1\nbogus = 2\ncatalog_engine = x\n", str(tmp_path))

    def test_missing_listen(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config("catalog_engine = rel1\n[engine:rel1]\nkind = relational\naddress = a:1\n", str(tmp_path))

    def test_config_path_precedence(self, monkeypatch):
        from polygate.gateway import resolve_config_path

        monkeypatch.delenv("POLYGATE_CONFIG", raising=False)
        assert resolve_config_path(None) == "polygate.conf"
        monkeypatch.setenv("POLYGATE_CONFIG", "/etc/pg.conf")
        assert resolve_config_path(None) == "/etc/pg.conf"
        assert resolve_config_path("cli.conf") == "cli.conf"

    def test_main_reports_config_error(self, tmp_path, capsys):
        from polygate.gateway import main

        assert main(["--config", str(tmp_path / "missing.conf")]) == 1
        assert "cannot read config" in capsys.readouterr().out


class TestServe:
    def test_bind_error_on_same_port(self, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        svc1 = make_service(tmp_path / "a")
        svc1.bind()
        port = svc1.port
        text = THREE_ENGINES.format(base=tmp_path / "b").replace("127.0.0.1:0", f"127.0.0.1:{port}")
        svc2 = GatewayService(parse_config(text, str(tmp_path / "b")))
        try:
            with pytest.raises(BindError):
                svc2.bind()
        finally:
            svc1.shutdown()
            svc2.shutdown()

    def test_status_lists_three_up_engines(self, gateway, http):
        svc, base = gateway
        code, raw, _ = http.get(base, "/status")
        assert code == 200
        payload = json.loads(raw)
        assert len(payload["engines"]) == 3
        assert all(e["status"] == "up" for e in payload["engines"])
        assert payload["queries_served"] == 0
        assert payload["uptime_s"] >= 0


class TestQueryEndpoint:
    def test_limit_query_csv(self, gateway, http):
        svc, base = gateway
        load_demo(http, base)
        code, raw, headers = http.post(base, "/bigdawg/query", "bdrel(SELECT * FROM patients LIMIT 4)")
        assert code == 200
        assert headers["Content-Type"].startswith("text/csv")
        lines = raw.decode().strip().split("\n")
        assert lines[0] == "id,name,age,sex"
        assert len(lines) == 5

    def test_json_accept_header(self, gateway, http):
        svc, base = gateway
        load_demo(http, base)
        code, raw, _ = http.post(
            base, "/bigdawg/query", "bdrel(SELECT count(*) AS n FROM patients)",
            {"Accept": "application/json"},
        )
        assert code == 200
        payload = json.loads(raw)
        assert payload["schema"] == [{"name": "n", "type": "int64"}]
        assert payload["rows"] == [[5]]

    def test_parse_error_400_with_position(self, gateway, http):
        svc, base = gateway
        code, raw, _ = http.post(base, "/bigdawg/query", "bd???")
        assert code == 400
        payload = json.loads(raw)
        assert payload["position"] == "1:1"

    def test_unavailable_503_names_engine(self, gateway, http):
        svc, base = gateway
        load_demo(http, base)
        assert http.post(base, "/admin/engine/arr1/stop")[0] == 200
        code, raw, _ = http.post(base, "/bigdawg/query", "bdarray(scan(vitals))")
        assert code == 503
        assert json.loads(raw)["engine"] == "arr1"

    def test_counter_increments(self, gateway, http):
        svc, base = gateway
        load_demo(http, base)
        http.post(base, "/bigdawg/query", "bdrel(SELECT * FROM patients)")
        code, raw, _ = http.get(base, "/status")
        assert json.loads(raw)["queries_served"] == 1

    def test_explain_endpoint(self, gateway, http):
        svc, base = gateway
        load_demo(http, base)
        code, raw, _ = http.post(
            base,
            "/bigdawg/explain",
            "bdrel(SELECT p.name, a.hr FROM patients p JOIN "
            "bdcast(bdarray(subarray(scan(vitals),0,0,0,9)), v_tmp, (patient_id,t,hr), relational) a "
            "ON p.id = a.patient_id)",
        )
        assert code == 200
        kinds = [s["kind"] for s in json.loads(raw)["steps"]]
        assert kinds == ["execute", "migrate", "execute", "cleanup"]


class TestAdmin:
    def test_stop_status_start(self, gateway, http):
        svc, base = gateway
        code, raw, _ = http.post(base, "/admin/engine/arr1/stop")
        assert code == 200 and json.loads(raw) == {"name": "arr1", "status": "down", "changed": True}
        payload = json.loads(http.get(base, "/status")[1])
        by_name = {e["name"]: e for e in payload["engines"]}
        assert by_name["arr1"]["status"] == "down"
        # idempotent stop
        code, raw, _ = http.post(base, "/admin/engine/arr1/stop")
        assert code == 200 and json.loads(raw)["changed"] is False
        code, raw, _ = http.post(base, "/admin/engine/arr1/start")
        assert code == 200 and json.loads(raw)["changed"] is True
        code, raw, _ = http.post(base, "/admin/engine/arr1/start")
        assert code == 200 and json.loads(raw)["changed"] is False

    def test_unknown_engine_404(self, gateway, http):
        svc, base = gateway
        assert http.post(base, "/admin/engine/ghost/stop")[0] == 404

    def test_stop_start_round_trip_bytes(self, gateway, http):
        svc, base = gateway
        load_demo(http, base)
        q = "bdrel(SELECT * FROM patients)"
        before = http.post(base, "/bigdawg/query", q)[1]
        for name in ("rel1", "arr1", "kv1"):
            assert http.post(base, f"/admin/engine/{name}/stop")[0] == 200
        for name in ("rel1", "arr1", "kv1"):
            assert http.post(base, f"/admin/engine/{name}/start")[0] == 200
        after = http.post(base, "/bigdawg/query", q)[1]
        assert before == after

    def test_status_mirrors_direct_calls(self, gateway, http):
        from polygate.errors import EngineUnavailable

        svc, base = gateway
        load_demo(http, base)
        rng = random.Random(5)
        for _ in range(14):
            name = rng.choice(["rel1", "arr1", "kv1"])
            action = rng.choice(["stop", "start"])
            http.post(base, f"/admin/engine/{name}/{action}")
            payload = json.loads(http.get(base, "/status")[1])
            for e in payload["engines"]:
                handle = svc.registry.get(e["name"])
                try:
                    handle.call(lambda eng: eng.object_names())
                    direct_ok = True
                except EngineUnavailable:
                    direct_ok = False
                assert direct_ok == (e["status"] == "up")
            # through the gateway, planning also transits the catalog engine
            by_name = {e["name"]: e["status"] for e in payload["engines"]}
            code = http.post(base, "/bigdawg/query", 'bdtext({"op":"scan","table":"notes"})')[0]
            if by_name["rel1"] == "up" and by_name["kv1"] == "up":
                assert code == 200
            else:
                assert code == 503

    def test_catalog_endpoints(self, gateway, http):
        svc, base = gateway
        load_demo(http, base)
        code, raw, _ = http.get(base, "/catalog/objects")
        assert code == 200
        names = {o["name"]: o for o in json.loads(raw)}
        assert set(names) == {"patients", "vitals", "notes"}
        assert names["vitals"]["island"] == "array"
        code, raw, _ = http.get(base, "/catalog/engines")
        assert code == 200
        engines = json.loads(raw)
        assert {e["name"] for e in engines} == {"rel1", "arr1", "kv1"}
        assert all(e["status"] == "up" for e in engines)

    def test_load_twice_needs_replace(self, gateway, http):
        svc, base = gateway
        load_demo(http, base)
        code, raw, _ = http.post_json(base, "/admin/load", {"seed": 1, "patients": 5, "waveform_len": 10, "notes": 8})
        assert code == 400
        code, _, _ = http.post_json(
            base, "/admin/load",
            {"seed": 1, "patients": 5, "waveform_len": 10, "notes": 8, "replace": True},
        )
        assert code == 200


class TestRobustness:
    def test_cors_headers_everywhere(self, gateway, http):
        svc, base = gateway
        for code, _, headers in [
            http.get(base, "/status"),
            http.post(base, "/bigdawg/query", "garbage"),
            http.get(base, "/nope"),
        ]:
            assert headers.get("Access-Control-Allow-Origin") == "*"

    def test_options_preflight(self, gateway, http):
        svc, base = gateway
        code, _, headers = http.request(base, "OPTIONS", "/bigdawg/query")
        assert code == 204
        assert "POST" in headers.get("Access-Control-Allow-Methods", "")

    def test_fuzzed_bodies_well_formed(self, gateway, http):
        svc, base = gateway
        rng = random.Random(1234)
        for _ in range(150):
            body = fuzz_input(rng).encode("utf-8", errors="ignore")
            code, raw, _ = http.post(base, "/bigdawg/query", body)
            assert code in (200, 400, 503), raw
            if code != 200:
                payload = json.loads(raw)
                assert "error" in payload

    def test_invalid_utf8_body(self, gateway, http):
        svc, base = gateway
        code, raw, _ = http.post(base, "/bigdawg/query", b"\xff\xfe\x01")
        assert code == 400

    def test_unknown_path_404(self, gateway, http):
        svc, base = gateway
        assert http.get(base, "/bogus")[0] == 404
        assert http.post(base, "/bogus", "x")[0] == 404


class TestDurability:
    def test_restart_preserves_objects(self, tmp_path, http):
        svc = make_service(tmp_path)
        svc.bind()
        svc.start_background()
        base = f"http://127.0.0.1:{svc.port}"
        load_demo(http, base)
        q = "bdrel(SELECT * FROM patients)"
        before = http.post(base, "/bigdawg/query", q)[1]
        svc.shutdown()

        svc2 = make_service(tmp_path)
        svc2.bind()
        svc2.start_background()
        base2 = f"http://127.0.0.1:{svc2.port}"
        after = http.post(base2, "/bigdawg/query", q)[1]
        assert before == after
        svc2.shutdown()

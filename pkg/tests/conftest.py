import json
import urllib.error
import urllib.request

import pytest

from polygate.gateway import GatewayService, parse_config

THREE_ENGINES = """
listen = 127.0.0.1:0
catalog_engine = rel1
log_level = warning

[engine:rel1]
kind = relational
address = rel1.local:5401
data_dir = {base}/rel1

[engine:arr1]
kind = array
address = arr1.local:5402
data_dir = {base}/arr1

[engine:kv1]
kind = text
address = kv1.local:5403
data_dir = {base}/kv1
"""

SIX_ENGINES = THREE_ENGINES + """
[engine:rel2]
kind = relational
address = rel2.local:5404
data_dir = {base}/rel2

[engine:arr2]
kind = array
address = arr2.local:5405
data_dir = {base}/arr2

[engine:kv2]
kind = text
address = kv2.local:5406
data_dir = {base}/kv2
"""


def make_service(tmp_path, config_template=THREE_ENGINES) -> GatewayService:
    config = parse_config(config_template.format(base=tmp_path), base_dir=str(tmp_path))
    return GatewayService(config)


@pytest.fixture
def service(tmp_path):
    svc = make_service(tmp_path)
    yield svc
    svc.shutdown()


@pytest.fixture
def service6(tmp_path):
    svc = make_service(tmp_path, SIX_ENGINES)
    yield svc
    svc.shutdown()


@pytest.fixture
def gateway(tmp_path):
    """A bound HTTP gateway on an ephemeral port; yields (service, base_url)."""
    svc = make_service(tmp_path)
    svc.bind()
    svc.start_background()
    yield svc, f"http://127.0.0.1:{svc.port}"
    svc.shutdown()


class Http:
    @staticmethod
    def request(base, method, path, body=b"", headers=None):
        req = urllib.request.Request(base + path, data=body if method == "POST" else None, method=method)
        for k, v in (headers or {}).items():
            req.add_header(k, v)
        try:
            with urllib.request.urlopen(req, timeout=30) as resp:
                return resp.status, resp.read(), dict(resp.headers)
        except urllib.error.HTTPError as e:
            return e.code, e.read(), dict(e.headers)

    @classmethod
    def get(cls, base, path, headers=None):
        return cls.request(base, "GET", path, headers=headers)

    @classmethod
    def post(cls, base, path, body="", headers=None):
        data = body.encode("utf-8") if isinstance(body, str) else body
        return cls.request(base, "POST", path, data, headers)

    @classmethod
    def post_json(cls, base, path, obj):
        return cls.post(base, path, json.dumps(obj), {"Content-Type": "application/json"})


@pytest.fixture
def http():
    return Http

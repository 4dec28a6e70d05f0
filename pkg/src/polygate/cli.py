"""Thin HTTP client for the gateway: query, status, engine start/stop, load,
and an interactive repl.

Exit codes: 0 on 2xx, 1 on 4xx, 2 on 5xx, 3 when the gateway is unreachable.
The endpoint comes from --endpoint, then POLYGATE_ENDPOINT, then localhost.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import urllib.error
import urllib.request

ENDPOINT_ENV_VAR = "POLYGATE_ENDPOINT"
DEFAULT_ENDPOINT = "http://127.0.0.1:8080"


class Response:
    def __init__(self, code: int, body: bytes, content_type: str = ""):
        self.code = code
        self.body = body
        self.content_type = content_type

    @property
    def text(self) -> str:
        return self.body.decode("utf-8", errors="replace")

    def json(self):
        return json.loads(self.text)

    def exit_code(self) -> int:
        if 200 <= self.code < 300:
            return 0
        if 400 <= self.code < 500:
            return 1
        return 2


def http(endpoint: str, method: str, path: str, body: bytes = b"", headers=None) -> Response:
    url = endpoint.rstrip("/") + path
    req = urllib.request.Request(url, data=body if method == "POST" else None, method=method)
    for k, v in (headers or {}).items():
        req.add_header(k, v)
    try:
        with urllib.request.urlopen(req, timeout=120) as resp:
            return Response(resp.status, resp.read(), resp.headers.get("Content-Type", ""))
    except urllib.error.HTTPError as e:
        return Response(e.code, e.read(), e.headers.get("Content-Type", ""))


def _print_error(resp: Response):
    try:
        payload = resp.json()
        msg = payload.get("error", resp.text)
        pos = payload.get("position")
        if pos:
            print(f"error: {msg} (at {pos})", file=sys.stderr)
        elif payload.get("engine"):
            print(f"error: {msg} (engine {payload['engine']})", file=sys.stderr)
        else:
            print(f"error: {msg}", file=sys.stderr)
    except (ValueError, KeyError):
        print(f"error: HTTP {resp.code}: {resp.text}", file=sys.stderr)


def cmd_query(endpoint: str, text: str, explain: bool, as_json: bool) -> int:
    path = "/bigdawg/explain" if explain else "/bigdawg/query"
    headers = {"Content-Type": "text/plain"}
    if as_json:
        headers["Accept"] = "application/json"
    resp = http(endpoint, "POST", path, text.encode("utf-8"), headers)
    if resp.exit_code() == 0:
        if explain or as_json:
            print(json.dumps(resp.json(), indent=2))
        else:
            sys.stdout.write(resp.text)
    else:
        _print_error(resp)
    return resp.exit_code()


def cmd_status(endpoint: str) -> int:
    resp = http(endpoint, "GET", "/status")
    if resp.exit_code() != 0:
        _print_error(resp)
        return resp.exit_code()
    payload = resp.json()
    rows = [("NAME", "KIND", "STATUS", "OBJECTS", "ADDRESS")]
    for e in payload["engines"]:
        rows.append((e["name"], e["kind"], e["status"], str(e["objects"]), e["address"]))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    print(f"uptime: {payload['uptime_s']}s  queries served: {payload['queries_served']}")
    return 0


def cmd_engine(endpoint: str, action: str, name: str) -> int:
    resp = http(endpoint, "POST", f"/admin/engine/{name}/{action}")
    if resp.exit_code() == 0:
        payload = resp.json()
        print(f"{payload['name']}: {payload['status']} (changed: {payload['changed']})")
    else:
        _print_error(resp)
    return resp.exit_code()


def cmd_load(endpoint: str, args) -> int:
    body = json.dumps(
        {
            "seed": args.seed,
            "patients": args.patients,
            "waveform_len": args.len,
            "notes": args.notes,
            "replace": args.replace,
        }
    ).encode("utf-8")
    resp = http(endpoint, "POST", "/admin/load", body, {"Content-Type": "application/json"})
    if resp.exit_code() == 0:
        counts = resp.json()
        for obj in ("patients", "vitals", "notes"):
            print(f"{obj}: {counts[obj]}")
    else:
        _print_error(resp)
    return resp.exit_code()


def cmd_repl(endpoint: str) -> int:
    print("polygate repl; \\status shows the cluster, \\explain on|off toggles plans, \\q quits")
    explain = False
    while True:
        try:
            line = input("polygate> ").strip()
        except EOFError:
            print()
            return 0
        if not line:
            continue
        if line in ("\\q", "\\quit"):
            return 0
        if line == "\\status":
            cmd_status(endpoint)
            continue
        if line.startswith("\\explain"):
            arg = line.split(None, 1)[1].strip() if " " in line else ""
            if arg in ("on", "off"):
                explain = arg == "on"
                print(f"explain {'on' if explain else 'off'}")
            else:
                print("usage: \\explain on|off")
            continue
        if line.startswith("\\"):
            print(f"unknown meta-command {line.split()[0]!r}")
            continue
        if explain:
            cmd_query(endpoint, line, explain=True, as_json=False)
        cmd_query(endpoint, line, explain=False, as_json=False)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="polygate", description="Polystore gateway client")
    ap.add_argument(
        "--endpoint",
        default=None,
        help=f"gateway URL (default ${ENDPOINT_ENV_VAR} or {DEFAULT_ENDPOINT})",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    q = sub.add_parser("query", help="run a polystore query")
    q.add_argument("text")
    q.add_argument("--explain", action="store_true", help="show the plan instead of running")
    q.add_argument("--json", action="store_true", help="request a JSON result")

    sub.add_parser("status", help="show cluster status")

    eng = sub.add_parser("engine", help="start or stop an engine")
    eng.add_argument("action", choices=["start", "stop"])
    eng.add_argument("name")

    ld = sub.add_parser("load", help="load the synthetic demo dataset")
    ld.add_argument("--seed", type=int, default=42)
    ld.add_argument("--patients", type=int, default=100)
    ld.add_argument("--len", type=int, default=1000, help="waveform samples per patient")
    ld.add_argument("--notes", type=int, default=300)
    ld.add_argument("--replace", action="store_true")

    sub.add_parser("repl", help="interactive query loop")

    args = ap.parse_args(argv)
    endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV_VAR) or DEFAULT_ENDPOINT

    try:
        if args.command == "query":
            return cmd_query(endpoint, args.text, args.explain, args.json)
        if args.command == "status":
            return cmd_status(endpoint)
        if args.command == "engine":
            return cmd_engine(endpoint, args.action, args.name)
        if args.command == "load":
            return cmd_load(endpoint, args)
        return cmd_repl(endpoint)
    except (urllib.error.URLError, ConnectionError, TimeoutError, OSError) as e:
        print(f"error: cannot reach gateway at {endpoint}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())

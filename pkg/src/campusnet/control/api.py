"""HTTP+JSON API over the command bus.

Endpoints:

    GET    /topology
    GET    /ports?switch=SW
    POST   /ports/{ref}/vlan              {"vlan": N}
    POST   /ports/{ref}/clear-sticky
    POST   /quarantine                    {"host": .., "reason": ..}
    DELETE /quarantine/{host}
    POST   /ghost-sessions                {"manifest": ..} -> {"session": id}
    POST   /ghost-sessions/{id}/distribute  {"bytes": N}
    DELETE /ghost-sessions/{id}
    POST   /faults                        {"fault": "link-down X--Y"}
    GET    /events?since=SEQ[&follow=1]   (NDJSON; follow streams chunked)
    GET    /views/{name}?key=value
    GET    /reports/blocked               (text/plain)

Authorization: `Bearer <token>` looked up in the CAMPUSNET_TOKEN_FILE
table.  With no table configured every request runs as netadmin, which
keeps local scenarios and tests friction-free.  An optional
`Idempotency-Key` header makes mutating POSTs replay-safe.
"""

from __future__ import annotations

import json
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import (
    Forbidden,
    UnknownHost,
    UnknownTarget,
    UnknownView,
    ValidationFailed,
)
from .bus import Command, CommandBus
from .roles import ROLES, Role, load_token_table

_ERROR_STATUS = {
    Forbidden: 403,
    UnknownTarget: 404,
    UnknownHost: 404,
    UnknownView: 404,
    ValidationFailed: 422,
}


class ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "campusnet"
    bus: CommandBus = None            # set by make_server
    tokens: dict[str, Role] = {}

    def log_message(self, *args):     # quiet by default
        pass

    # -- plumbing ---------------------------------------------------------------

    def _role(self) -> Role | None:
        if not self.tokens:
            return ROLES["netadmin"]
        auth = self.headers.get("Authorization", "")
        if auth.startswith("Bearer "):
            return self.tokens.get(auth[7:].strip())
        return None

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if not length:
            return {}
        return json.loads(self.rfile.read(length))

    def _send(self, status: int, payload, content_type="application/json"):
        data = payload if isinstance(payload, bytes) else json.dumps(
            payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _run(self, op: str, arguments: dict):
        role = self._role()
        if role is None:
            return self._send(401, {"error": "missing or unknown token"})
        key = self.headers.get("Idempotency-Key")
        try:
            out = self.bus.execute(
                role, self.client_address[0],
                Command(op, arguments, idempotency_key=key))
        except Exception as exc:
            status = next(
                (code for cls, code in _ERROR_STATUS.items()
                 if isinstance(exc, cls)), 400)
            return self._send(status, {"error": str(exc)})
        return self._send(200, out)

    # -- routing ------------------------------------------------------------------

    def do_GET(self):
        parsed = urllib.parse.urlparse(self.path)
        parts = [urllib.parse.unquote(p)
                 for p in parsed.path.split("/") if p]
        query = dict(urllib.parse.parse_qsl(parsed.query))
        if parts == ["topology"]:
            return self._run("get_topology", {})
        if parts == ["ports"]:
            return self._run("get_ports", query)
        if parts == ["events"]:
            if query.get("follow"):
                return self._stream_events(int(query.get("since", 0)))
            return self._run("get_events", query)
        if len(parts) == 2 and parts[0] == "views":
            args = dict(query)
            args["view"] = parts[1]
            return self._run("query", args)
        if parts == ["reports", "blocked"]:
            role = self._role()
            if role is None:
                return self._send(401, {"error": "missing or unknown token"})
            try:
                out = self.bus.execute(role, self.client_address[0],
                                       Command("blocked_report", {}))
            except Forbidden as exc:
                return self._send(403, {"error": str(exc)})
            return self._send(200, out["result"]["report"].encode(),
                              content_type="text/plain")
        if len(parts) == 2 and parts[0] == "hosts":
            return self._run("locate", {"host": parts[1]})
        return self._send(404, {"error": f"no route {parsed.path}"})

    def do_POST(self):
        parts = [urllib.parse.unquote(p)
                 for p in self.path.split("?")[0].split("/") if p]
        body = self._body()
        if len(parts) == 3 and parts[0] == "ports" and parts[2] == "vlan":
            return self._run("move_port_vlan",
                             {"port": parts[1], "vlan": body["vlan"]})
        if len(parts) == 3 and parts[0] == "ports" and \
                parts[2] == "clear-sticky":
            return self._run("clear_sticky", {"port": parts[1]})
        if parts == ["quarantine"]:
            return self._run("quarantine", body)
        if parts == ["ghost-sessions"]:
            return self._run("start_ghost", body)
        if len(parts) == 3 and parts[0] == "ghost-sessions" and \
                parts[2] == "distribute":
            return self._run("distribute_ghost",
                             {"session": parts[1], "bytes": body["bytes"]})
        if parts == ["faults"]:
            return self._run("inject_fault", body)
        if len(parts) == 2 and parts[0] == "failover":
            return self._run("failover", {"pair": parts[1]})
        if len(parts) == 2 and parts[0] == "failback":
            return self._run("failback", {"pair": parts[1]})
        if parts == ["advance"]:
            return self._run("advance", body)
        if parts == ["sync-inventory"]:
            return self._run("sync_inventory", {})
        return self._send(404, {"error": f"no route {self.path}"})

    def do_DELETE(self):
        parts = [urllib.parse.unquote(p)
                 for p in self.path.split("?")[0].split("/") if p]
        if len(parts) == 2 and parts[0] == "quarantine":
            return self._run("unquarantine", {"host": parts[1]})
        if len(parts) == 2 and parts[0] == "ghost-sessions":
            return self._run("teardown_ghost", {"session": parts[1]})
        return self._send(404, {"error": f"no route {self.path}"})

    # -- event streaming -------------------------------------------------------------

    def _stream_events(self, since: int):
        """One chunked NDJSON response carrying everything past the cursor.

        The simulated clock only moves when commands run, so `follow`
        flushes the current backlog and closes; the console reconnects
        with the last seq it saw (no gaps, no duplicates by cursor).
        """
        role = self._role()
        if role is None:
            return self._send(401, {"error": "missing or unknown token"})
        events = self.bus.execute(
            role, self.client_address[0],
            Command("get_events", {"since": since}))["result"]
        self.send_response(200)
        self.send_header("Content-Type", "application/x-ndjson")
        self.send_header("Transfer-Encoding", "chunked")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        for event in events:
            line = (json.dumps(event) + "\n").encode()
            self.wfile.write(f"{len(line):x}\r\n".encode() + line + b"\r\n")
        self.wfile.write(b"0\r\n\r\n")


def make_server(bus: CommandBus, listen: str = "127.0.0.1:8420",
                token_file: str | None = None) -> ThreadingHTTPServer:
    host, _, port = listen.rpartition(":")
    handler = type("BoundApiHandler", (ApiHandler,), {
        "bus": bus,
        "tokens": load_token_table(token_file),
    })
    return ThreadingHTTPServer((host or "127.0.0.1", int(port)), handler)


def serve_forever(bus: CommandBus, listen: str,
                  token_file: str | None = None) -> None:
    server = make_server(bus, listen, token_file)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def serve_background(bus: CommandBus, listen: str = "127.0.0.1:0",
                     token_file: str | None = None):
    """Start on a background thread; returns (server, "host:port")."""
    server = make_server(bus, listen, token_file)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    return server, f"{host}:{port}"

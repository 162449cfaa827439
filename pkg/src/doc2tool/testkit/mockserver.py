"""In-process HTTP server with templated routes, fault injection, and a
request log for safety assertions."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any
from urllib.parse import parse_qs, unquote, urlsplit

from ..errors import PortUnavailable

FAULT_MODES = ("none", "always500", "timeout", "authWall", "emptyBody")


@dataclass(frozen=True)
class MockRoute:
    """One served route; ``path`` uses ``{param}`` placeholders per segment.

    ``expect_path`` / ``expect_query`` pin accepted values: a mismatch yields
    a 404/400 error body, which is how wrong-parameter scenarios are staged.
    ``fault`` overrides the configured body and status entirely.
    """

    path: str
    body: Any = None
    status: int = 200
    method: str = "GET"
    fault: str = "none"
    expect_path: dict[str, str] = field(default_factory=dict)
    expect_query: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.fault not in FAULT_MODES:
            raise ValueError(f"unknown fault mode: {self.fault!r}")
        if not self.path.startswith("/"):
            raise ValueError(f"route path must start with /: {self.path!r}")


@dataclass(frozen=True)
class LoggedRequest:
    method: str
    path: str
    query: dict[str, str]


def _match(template: str, path: str) -> dict[str, str] | None:
    t_parts = [p for p in template.split("/") if p]
    p_parts = [p for p in path.split("/") if p]
    if len(t_parts) != len(p_parts):
        return None
    values: dict[str, str] = {}
    for t, p in zip(t_parts, p_parts):
        if t.startswith("{") and t.endswith("}"):
            values[t[1:-1]] = unquote(p)
        elif t != unquote(p):
            return None
    return values


class _Handler(BaseHTTPRequestHandler):
    server: "_Server"

    def log_message(self, *args: Any) -> None:  # silence stderr chatter
        pass

    def _respond(self, status: int, payload: Any, raw: bool = False) -> None:
        if raw:
            body = (payload or "").encode("utf-8")
            ctype = "text/plain; charset=utf-8"
        else:
            body = json.dumps(payload).encode("utf-8")
            ctype = "application/json; charset=utf-8"
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _handle(self, method: str) -> None:
        split = urlsplit(self.path)
        query = {k: v[0] for k, v in parse_qs(split.query, keep_blank_values=True).items()}
        self.server.owner.log_request(LoggedRequest(method=method, path=split.path, query=query))

        for route in self.server.owner.routes:
            if route.method != method:
                continue
            path_values = _match(route.path, split.path)
            if path_values is None:
                continue
            self._serve(route, path_values, query)
            return
        self._respond(404, {"error": f"no route for {method} {split.path}"})

    def _serve(self, route: MockRoute, path_values: dict[str, str], query: dict[str, str]) -> None:
        if route.fault == "always500":
            self._respond(500, "internal server error", raw=True)
            return
        if route.fault == "timeout":
            time.sleep(self.server.owner.timeout_fault_delay)
            self._respond(200, {"late": True})
            return
        if route.fault == "authWall":
            self._respond(401, {"message": "invalid key"})
            return
        if route.fault == "emptyBody":
            self._respond(200, "", raw=True)
            return

        for name, expected in route.expect_path.items():
            if path_values.get(name) != expected:
                self._respond(404, {"error": f"unknown {name}: {path_values.get(name)!r}"})
                return
        for name, expected in route.expect_query.items():
            if name not in query:
                self._respond(400, {"error": f"missing query parameter: {name}"})
                return
            if expected and query[name] != expected:
                self._respond(404, {"error": f"unknown {name}: {query[name]!r}"})
                return

        body = route.body if route.body is not None else {"ok": True}
        if isinstance(body, str):
            self._respond(route.status, body, raw=True)
        else:
            self._respond(route.status, body)

    def do_GET(self) -> None:
        self._handle("GET")

    def do_POST(self) -> None:
        self._handle("POST")

    def do_PUT(self) -> None:
        self._handle("PUT")

    def do_DELETE(self) -> None:
        self._handle("DELETE")


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    owner: "MockServer"


class MockServer:
    """Bound mock server handle; ``log`` records every request received."""

    def __init__(
        self,
        routes: list[MockRoute],
        host: str = "127.0.0.1",
        port: int = 0,
        timeout_fault_delay: float = 5.0,
    ):
        self.routes = list(routes)
        self.timeout_fault_delay = timeout_fault_delay
        self._log: list[LoggedRequest] = []
        self._log_lock = threading.Lock()
        try:
            self._server = _Server((host, port), _Handler)
        except OSError as exc:
            raise PortUnavailable(f"cannot bind {host}:{port}: {exc}") from exc
        self._server.owner = self
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def address(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    @property
    def base_url(self) -> str:
        return f"http://{self.address}"

    @property
    def log(self) -> list[LoggedRequest]:
        with self._log_lock:
            return list(self._log)

    def log_request(self, entry: LoggedRequest) -> None:
        with self._log_lock:
            self._log.append(entry)

    def clear_log(self) -> None:
        with self._log_lock:
            self._log.clear()

    def add_routes(self, routes: list[MockRoute]) -> None:
        self.routes.extend(routes)

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "MockServer":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.stop()


def start_mock(routes: list[MockRoute], **kwargs: Any) -> MockServer:
    return MockServer(routes, **kwargs)

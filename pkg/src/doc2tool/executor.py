"""Bind parameter values into a tool and perform the HTTP call.

The invocation capture mirrors the four-key shape emitted tools print
(status_code/text/json/content); transport failures are captured in the
record, never raised past the executor.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Any
from urllib.parse import quote, urlsplit

import requests

from .compiler import ToolSpec, substitute
from .errors import MethodDisallowed

MAX_BODY_BYTES = 1 << 20  # responses capped at 1 MiB, flagged when truncated
JUDGE_WINDOW_BYTES = 4096

_CORE_KEYS = ("status_code", "text", "json", "content")


@dataclass(frozen=True)
class ParamBinding:
    values: dict[str, Any]
    unbound_required: tuple[str, ...]

    @property
    def invocable(self) -> bool:
        return not self.unbound_required


@dataclass(frozen=True)
class InvocationRecord:
    status_code: int | None
    text: str
    json_value: Any
    content: str
    error: str | None = None
    request_url: str = ""
    started_at: float = 0.0
    elapsed_ms: float = 0.0
    truncated: bool = False

    def to_json(self) -> dict[str, Any]:
        # The four core keys match the emitted-tool capture bit-for-bit;
        # artifact extensions are prefixed x_.
        return {
            "status_code": self.status_code,
            "text": self.text,
            "json": self.json_value,
            "content": self.content,
            "x_error": self.error,
            "x_request_url": self.request_url,
            "x_elapsed_ms": self.elapsed_ms,
            "x_truncated": self.truncated,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "InvocationRecord":
        return cls(
            status_code=data.get("status_code"),
            text=data.get("text", ""),
            json_value=data.get("json"),
            content=data.get("content", ""),
            error=data.get("x_error"),
            request_url=data.get("x_request_url", ""),
            elapsed_ms=data.get("x_elapsed_ms", 0.0),
            truncated=data.get("x_truncated", False),
        )

    def core_capture(self) -> dict[str, Any]:
        full = self.to_json()
        return {key: full[key] for key in _CORE_KEYS}


@dataclass
class ExecutorConfig:
    timeout: float = 50.0
    courtesy_delay: float = 0.2  # per-host spacing between requests
    allow_methods: frozenset[str] = frozenset({"GET"})
    max_body_bytes: int = MAX_BODY_BYTES


class _HostThrottle:
    """Serializes requests per host and enforces the courtesy delay."""

    def __init__(self, delay: float):
        self.delay = delay
        self._lock = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}

    def _lock_for(self, host: str) -> threading.Lock:
        with self._lock:
            if host not in self._locks:
                self._locks[host] = threading.Lock()
            return self._locks[host]

    def wait(self, host: str) -> None:
        if self.delay <= 0:
            return
        with self._lock_for(host):
            last = self._last.get(host, 0.0)
            now = time.monotonic()
            remaining = last + self.delay - now
            if remaining > 0:
                time.sleep(remaining)
            self._last[host] = time.monotonic()


def bind_params(tool: ToolSpec, values: dict[str, Any]) -> ParamBinding:
    """Check required parameters and auto-fill optional defaults.

    Missing requireds are reported in ``unbound_required`` rather than raised,
    so the validator can label the tool NoParameterValue.
    """
    bound: dict[str, Any] = {}
    unbound: list[str] = []
    known = {p.spec.name for p in tool.params}
    for param in tool.params:
        name = param.spec.name
        if name in values and values[name] is not None:
            bound[name] = values[name]
        elif param.spec.default is not None:
            bound[name] = param.spec.default
        elif param.required:
            unbound.append(name)
    # Pass-through values the tool does not declare (donor extras, kwargs).
    for name, value in values.items():
        if name not in known and value is not None:
            bound[name] = value
    return ParamBinding(values=bound, unbound_required=tuple(unbound))


class Executor:
    def __init__(self, config: ExecutorConfig | None = None):
        self.config = config or ExecutorConfig()
        self._throttle = _HostThrottle(self.config.courtesy_delay)

    def build_url(self, tool: ToolSpec, binding: ParamBinding) -> str:
        path_values = {
            name: quote(str(binding.values[name]), safe="") for name in tool.path_params
        }
        url = substitute(tool.url_template, path_values)
        suffix = tool.optional_path_suffix
        if suffix is not None:
            value = binding.values.get(suffix)
            spec = tool.param(suffix)
            default = spec.spec.default if spec else None
            if value is not None and (default is None or str(value) != str(default)):
                url += "." + quote(str(value), safe="")
        return url

    def query_values(self, tool: ToolSpec, binding: ParamBinding) -> dict[str, Any]:
        skip = set(tool.path_params)
        if tool.optional_path_suffix:
            skip.add(tool.optional_path_suffix)
        skip.update(p.spec.name for p in tool.header_params())
        query = {
            key: value for key, value in tool.frozen_params.items() if key not in skip
        }
        for key, value in binding.values.items():
            if key not in skip:
                query[key] = value
        return query

    def invoke(self, tool: ToolSpec, binding: ParamBinding) -> InvocationRecord:
        """Single HTTP request with full capture; no retries at this layer."""
        if tool.method not in self.config.allow_methods:
            # Belt-and-braces re-check of the compiler policy.
            raise MethodDisallowed(f"{tool.tool_id}: {tool.method}")
        if not binding.invocable:
            raise ValueError(f"binding missing required params: {binding.unbound_required}")

        url = self.build_url(tool, binding)
        headers = {
            p.spec.name: str(binding.values.get(p.spec.name, p.spec.default))
            for p in tool.header_params()
            if binding.values.get(p.spec.name, p.spec.default) is not None
        }
        started = time.time()
        start_clock = time.monotonic()
        self._throttle.wait(urlsplit(url).netloc)
        try:
            resp = requests.request(
                tool.method,
                url,
                params=self.query_values(tool, binding),
                headers=headers or None,
                timeout=self.config.timeout,
                verify=tool.tls_verify,
                stream=True,
            )
            body = resp.raw.read(self.config.max_body_bytes + 1, decode_content=True)
            truncated = len(body) > self.config.max_body_bytes
            if truncated:
                body = body[: self.config.max_body_bytes]
            final_url = resp.url
            status = resp.status_code
        except requests.RequestException as exc:
            return InvocationRecord(
                status_code=None,
                text="",
                json_value=None,
                content="",
                error=f"{type(exc).__name__}: {exc}",
                request_url=url,
                started_at=started,
                elapsed_ms=(time.monotonic() - start_clock) * 1000.0,
            )

        content = body.decode("utf-8", errors="replace")
        try:
            json_value = json.loads(content) if content.strip() else None
        except ValueError:
            json_value = None
        return InvocationRecord(
            status_code=status,
            text=content,
            json_value=json_value,
            content=content,
            request_url=final_url,
            started_at=started,
            elapsed_ms=(time.monotonic() - start_clock) * 1000.0,
            truncated=truncated,
        )

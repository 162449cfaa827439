"""Emit validated tools as executable source files and as an OpenAPI 3.1
document."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .compiler import ToolSpec
from .errors import NameCollision
from .toolsource import emit_tool_source

OPENAPI_VERSION = "3.1.0"


@dataclass(frozen=True)
class ToolSet:
    tools: tuple[ToolSpec, ...]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = [t.name for t in self.tools]
        duplicates = {n for n in names if names.count(n) > 1}
        if duplicates:
            raise NameCollision(f"duplicate tool names: {sorted(duplicates)}")
        not_passed = [t.tool_id for t in self.tools if t.status != "passed"]
        if not_passed:
            raise ValueError(f"ToolSet only holds verified tools; got {not_passed}")

    def get(self, name: str) -> ToolSpec | None:
        for tool in self.tools:
            if tool.name == name:
                return tool
        return None


def emit_executable_tool(tool: ToolSpec, out_dir: str | Path, timeout: float = 50) -> Path:
    """Write one tool as a standalone Python file named ``{name}.py``."""
    path = Path(out_dir) / f"{tool.name}.py"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(emit_tool_source(tool, timeout=timeout), encoding="utf-8")
    return path


def split_server_path(url_template: str) -> tuple[str, str]:
    """Split a URL template into (server, path-with-placeholders).

    A placeholder inside the authority (e.g. a templated port) promotes the
    split point so every placeholder lands in the path item."""
    scheme_end = url_template.find("://")
    authority_start = scheme_end + 3 if scheme_end >= 0 else 0
    slash = url_template.find("/", authority_start)
    brace = url_template.find("{")
    if brace >= 0 and (slash < 0 or brace < slash):
        server = url_template[:brace].rstrip(":/")
        path = "/" + url_template[brace:].lstrip("/")
    elif slash >= 0:
        server = url_template[:slash]
        path = url_template[slash:]
    else:
        server = url_template
        path = "/"
    return server, path


def emit_openapi(toolset: ToolSet, title: str = "doc2tool export") -> dict[str, Any]:
    """One path item per tool; raises on an empty set or name collisions."""
    if not toolset.tools:
        raise ValueError("cannot export an empty tool set")
    paths: dict[str, dict[str, Any]] = {}
    for tool in toolset.tools:
        server, path = split_server_path(tool.url_template)
        method = tool.method.lower()
        operation = {
            "operationId": tool.name,
            "description": tool.description,
            "servers": [{"url": server}],
            "parameters": _openapi_parameters(tool, path),
            "responses": {"200": {"description": "Successful response"}},
        }
        item = paths.setdefault(path, {})
        if method in item:
            raise NameCollision(f"duplicate operation {method.upper()} {path}")
        item[method] = operation
    return {
        "openapi": OPENAPI_VERSION,
        "info": {"title": title, "version": "0.1.0"},
        "paths": paths,
    }


def _openapi_parameters(tool: ToolSpec, path: str) -> list[dict[str, Any]]:
    parameters: list[dict[str, Any]] = []
    for name in tool.path_params:
        if "{" + name + "}" not in path:
            continue
        param = tool.param(name)
        parameters.append(
            {
                "name": name,
                "in": "path",
                "required": True,
                "description": (param.spec.description if param else None) or "",
                "schema": {"type": "string"},
            }
        )
    for param in tool.query_params():
        if param.spec.name == tool.optional_path_suffix:
            continue  # appended once below
        entry: dict[str, Any] = {
            "name": param.spec.name,
            "in": "query",
            "required": param.required,
            "description": param.spec.description or "",
            "schema": {"type": "string"},
        }
        if param.spec.default is not None:
            entry["schema"]["default"] = param.spec.default
        parameters.append(entry)
    if tool.optional_path_suffix:
        param = tool.param(tool.optional_path_suffix)
        entry = {
            "name": tool.optional_path_suffix,
            "in": "query",
            "required": False,
            "description": (param.spec.description if param else None) or "",
            "schema": {"type": "string"},
        }
        if param and param.spec.default is not None:
            entry["schema"]["default"] = param.spec.default
        parameters.append(entry)
    return parameters


def parse_openapi(document: dict[str, Any]) -> dict[str, Any]:
    """Project an emitted document back to its path/parameter structure."""
    projection: dict[str, Any] = {}
    for path, item in document.get("paths", {}).items():
        for method, operation in item.items():
            projection[operation["operationId"]] = {
                "path": path,
                "method": method.upper(),
                "parameters": sorted(
                    (p["name"], p["in"], p["required"])
                    for p in operation.get("parameters", [])
                ),
            }
    return projection


def write_openapi(toolset: ToolSet, out_dir: str | Path) -> Path:
    path = Path(out_dir) / "tools.openapi.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(emit_openapi(toolset), indent=2), encoding="utf-8")
    return path

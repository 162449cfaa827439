"""Serve a verified tool set over HTTP: list tools, describe one, invoke one.

Invocation responses use the same capture shape as direct executor calls, so a
client cannot tell whether a record came over the wire or from in-process use.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .compiler import ToolSpec
from .executor import Executor, bind_params
from .exporter import ToolSet

DEFAULT_BIND = "127.0.0.1:8742"


def describe_tool(tool: ToolSpec) -> dict[str, Any]:
    return {
        "name": tool.name,
        "tool_id": tool.tool_id,
        "description": tool.description,
        "method": tool.method,
        "url_template": tool.url_template,
        "example_binding": tool.example_binding,
        "parameters": [
            {
                "name": p.spec.name,
                "type": p.spec.type,
                "description": p.spec.description,
                "required": p.required,
                "location": p.location,
                "default": p.spec.default,
                "example": p.spec.example,
            }
            for p in tool.params
        ],
    }


def build_app(toolset: ToolSet, executor: Executor | None = None) -> FastAPI:
    executor = executor or Executor()
    app = FastAPI(title="doc2tool service", version="0.1.0")

    @app.get("/tools")
    def list_tools() -> list[dict[str, Any]]:
        return [
            {"name": t.name, "description": t.description, "method": t.method}
            for t in toolset.tools
        ]

    @app.get("/tools/{name}")
    def get_tool(name: str) -> Any:
        tool = toolset.get(name)
        if tool is None:
            return JSONResponse(status_code=404, content={"detail": f"unknown tool: {name}"})
        return describe_tool(tool)

    @app.post("/tools/{name}/invoke")
    def invoke_tool(name: str, values: dict[str, Any] | None = None) -> Any:
        tool = toolset.get(name)
        if tool is None:
            return JSONResponse(status_code=404, content={"detail": f"unknown tool: {name}"})
        binding = bind_params(tool, values or {})
        if binding.unbound_required:
            return JSONResponse(
                status_code=422,
                content={
                    "detail": "missing required parameters",
                    "missing": list(binding.unbound_required),
                },
            )
        record = executor.invoke(tool, binding)
        if record.status_code is None:
            # Upstream transport failure; the capture still travels in the body.
            return JSONResponse(status_code=502, content=record.to_json())
        return record.to_json()

    return app


def serve_tools(toolset: ToolSet, bind: str = DEFAULT_BIND, executor: Executor | None = None) -> None:
    import uvicorn

    host, _, port = bind.partition(":")
    uvicorn.run(build_app(toolset, executor), host=host or "127.0.0.1", port=int(port or 8742))

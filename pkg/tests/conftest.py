import time
from types import SimpleNamespace
from typing import Any

import pytest

from doc2tool.compiler import ToolSpec
from doc2tool.docingest import ParameterSpec
from doc2tool.compiler import ToolParam
from doc2tool.pipeline import (
    PipelineConfig,
    stage_compile,
    stage_extract,
    stage_export,
    stage_infer,
    stage_refine,
    stage_report,
    stage_validate,
)
from doc2tool.testkit import build_corpus, corpus_routes, start_mock
from doc2tool.toolsource import HARNESS_DIGEST


def make_tool(
    name: str = "sample_tool",
    url: str = "http://example.test/items/{item_id}",
    required: dict[str, Any] | None = None,
    optional: dict[str, Any] | None = None,
    binding: dict[str, Any] | None = None,
    method: str = "GET",
    source_id: str = "sample_api",
    **overrides: Any,
) -> ToolSpec:
    """Build a synthetic ToolSpec; path params are inferred from the URL."""
    import re

    path_params = tuple(dict.fromkeys(re.findall(r"\{(\w+)\}", url)))
    required = dict(required or {name: None for name in path_params})
    optional = dict(optional or {})
    params = []
    for pname, example in required.items():
        location = "path" if pname in path_params else "query"
        params.append(
            ToolParam(
                spec=ParameterSpec(name=pname, example=example),
                required=True,
                location=location,
            )
        )
    for pname, default in optional.items():
        params.append(
            ToolParam(
                spec=ParameterSpec(name=pname, default=default),
                required=False,
                location="query",
            )
        )
    fields: dict[str, Any] = dict(
        tool_id=f"{source_id}.{name}",
        name=name,
        description=f"{name} endpoint",
        method=method,
        url_template=url,
        path_params=path_params,
        params=tuple(params),
        example_binding=binding,
        provenance="direct",
        source=(source_id, name),
        harness_digest=HARNESS_DIGEST,
    )
    fields.update(overrides)
    return ToolSpec(**fields)


@pytest.fixture(scope="session")
def mock_server():
    server = start_mock(corpus_routes())
    yield server
    server.stop()


@pytest.fixture(scope="session")
def corpus_build(mock_server, tmp_path_factory):
    return build_corpus(mock_server.base_url, tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def pipeline_run(mock_server, corpus_build, tmp_path_factory):
    """One full pipeline run over the corpus, with stage outputs and timing."""
    out = tmp_path_factory.mktemp("artifacts")
    cfg = PipelineConfig(
        input=str(corpus_build.docs_dir),
        out=str(out),
        llm_backend=f"scripted:{corpus_build.oracle_dir}",
        courtesy_delay=0.02,
        timeout_secs=5,
    )
    start = time.monotonic()
    apis = stage_extract(cfg)
    tools = stage_compile(cfg)
    round0 = stage_validate(cfg)
    kb = stage_infer(cfg)
    refined = stage_refine(cfg)
    toolset = stage_export(cfg)
    report = stage_report(cfg)
    elapsed = time.monotonic() - start
    return SimpleNamespace(
        cfg=cfg,
        apis=apis,
        tools=tools,
        round0=round0,
        kb=kb,
        refined=refined,
        toolset=toolset,
        report=report,
        elapsed=elapsed,
        mock=mock_server,
        build=corpus_build,
    )

from dataclasses import replace

import pytest
from fastapi.testclient import TestClient

from conftest import make_tool
from doc2tool.executor import Executor, ExecutorConfig, bind_params
from doc2tool.exporter import ToolSet
from doc2tool.service import build_app, describe_tool
from doc2tool.testkit import MockRoute, start_mock


@pytest.fixture(scope="module")
def mock():
    routes = [
        MockRoute(path="/items/{item_id}", body={"item_id": "SKU-1", "price": 10}),
        MockRoute(path="/ping", body={"pong": True}),
    ]
    server = start_mock(routes)
    yield server
    server.stop()


@pytest.fixture(scope="module")
def toolset(mock):
    return ToolSet(
        tools=(
            replace(
                make_tool(
                    name="get_item",
                    url=f"{mock.base_url}/items/{{item_id}}",
                    binding={"item_id": "SKU-1"},
                ),
                status="passed",
            ),
            replace(
                make_tool(name="ping", url=f"{mock.base_url}/ping", required={}, binding={}),
                status="passed",
            ),
            replace(
                make_tool(name="dead", url="http://127.0.0.1:9/x", required={}, binding={}),
                status="passed",
            ),
        )
    )


@pytest.fixture(scope="module")
def executor():
    return Executor(ExecutorConfig(timeout=1.0, courtesy_delay=0.0))


@pytest.fixture(scope="module")
def client(toolset, executor):
    return TestClient(build_app(toolset, executor))


def test_list_tools(client):
    response = client.get("/tools")
    assert response.status_code == 200
    listed = {t["name"] for t in response.json()}
    assert listed == {"get_item", "ping", "dead"}
    assert all(set(t) == {"name", "description", "method"} for t in response.json())


def test_describe_tool_includes_binding_and_parameters(client, toolset):
    response = client.get("/tools/get_item")
    assert response.status_code == 200
    body = response.json()
    assert body == describe_tool(toolset.get("get_item"))
    assert body["example_binding"] == {"item_id": "SKU-1"}
    assert body["parameters"][0]["name"] == "item_id"
    assert body["parameters"][0]["required"] is True


def test_unknown_tool_is_404(client):
    assert client.get("/tools/nope").status_code == 404
    assert client.post("/tools/nope/invoke", json={}).status_code == 404


def test_invoke_missing_required_is_422_with_names(client):
    response = client.post("/tools/get_item/invoke", json={})
    assert response.status_code == 422
    assert response.json()["missing"] == ["item_id"]


def test_invoke_matches_direct_executor_capture(client, toolset, executor):
    response = client.post("/tools/get_item/invoke", json={"item_id": "SKU-1"})
    assert response.status_code == 200
    served = response.json()
    tool = toolset.get("get_item")
    direct = executor.invoke(tool, bind_params(tool, {"item_id": "SKU-1"})).to_json()
    core = ("status_code", "text", "json", "content")
    assert {k: served[k] for k in core} == {k: direct[k] for k in core}


def test_invoke_without_body_uses_defaults(client):
    response = client.post("/tools/ping/invoke")
    assert response.status_code == 200
    assert response.json()["json"] == {"pong": True}


def test_transport_failure_returns_502_with_capture(client):
    response = client.post("/tools/dead/invoke", json={})
    assert response.status_code == 502
    body = response.json()
    assert body["status_code"] is None
    assert body["x_error"]

import pytest

from conftest import make_tool
from doc2tool.errors import MethodDisallowed
from doc2tool.executor import Executor, ExecutorConfig, bind_params
from doc2tool.testkit import MockRoute, start_mock


@pytest.fixture(scope="module")
def mock():
    routes = [
        MockRoute(path="/items/{item_id}", body={"item_id": "SKU-1", "price": 10}),
        MockRoute(path="/slow", fault="timeout"),
        MockRoute(path="/big", body={"blob": "x" * 2048}),
        MockRoute(path="/text", body="plain text body"),
    ]
    server = start_mock(routes, timeout_fault_delay=2.0)
    yield server
    server.stop()


def executor(**kwargs) -> Executor:
    defaults = dict(timeout=1.0, courtesy_delay=0.0)
    defaults.update(kwargs)
    return Executor(ExecutorConfig(**defaults))


def test_bind_params_fills_defaults_and_reports_missing():
    tool = make_tool(
        required={"item_id": None, "q": None}, optional={"limit": "10"}
    )
    binding = bind_params(tool, {"item_id": "SKU-1"})
    assert binding.unbound_required == ("q",)
    assert not binding.invocable
    full = bind_params(tool, {"item_id": "SKU-1", "q": "mouse"})
    assert full.invocable
    assert full.values["limit"] == "10"


def test_bind_params_keeps_unknown_passthrough_values():
    binding = bind_params(make_tool(), {"item_id": "SKU-1", "extra": "yes"})
    assert binding.values["extra"] == "yes"


def test_build_url_percent_encodes():
    tool = make_tool(url="http://h/items/{item_id}")
    url = executor().build_url(tool, bind_params(tool, {"item_id": "a b/c"}))
    assert url == "http://h/items/a%20b%2Fc"


def test_build_url_optional_suffix_skipped_at_default():
    tool = make_tool(
        url="http://h/r/{a}",
        required={"a": "1"},
        optional={"format": "json"},
        optional_path_suffix="format",
    )
    ex = executor()
    at_default = ex.build_url(tool, bind_params(tool, {"a": "1", "format": "json"}))
    assert at_default == "http://h/r/1"
    explicit = ex.build_url(tool, bind_params(tool, {"a": "1", "format": "csv"}))
    assert explicit == "http://h/r/1.csv"


def test_query_values_exclude_path_and_headers():
    tool = make_tool(
        required={"item_id": None, "q": None},
        optional={"limit": "10"},
    )
    binding = bind_params(tool, {"item_id": "SKU-1", "q": "mouse"})
    query = executor().query_values(tool, binding)
    assert query == {"q": "mouse", "limit": "10"}


def test_invoke_success_capture(mock):
    tool = make_tool(url=f"{mock.base_url}/items/{{item_id}}")
    record = executor().invoke(tool, bind_params(tool, {"item_id": "SKU-1"}))
    assert record.status_code == 200
    assert record.json_value == {"item_id": "SKU-1", "price": 10}
    assert record.text == record.content
    assert record.error is None
    assert record.elapsed_ms > 0


def test_invoke_capture_core_keys(mock):
    tool = make_tool(url=f"{mock.base_url}/text", required={})
    record = executor().invoke(tool, bind_params(tool, {}))
    assert set(record.core_capture()) == {"status_code", "text", "json", "content"}
    assert record.json_value is None
    assert record.text == "plain text body"


def test_invoke_timeout_returns_error_record(mock):
    tool = make_tool(url=f"{mock.base_url}/slow", required={})
    record = executor(timeout=0.3).invoke(tool, bind_params(tool, {}))
    assert record.status_code is None
    assert record.error is not None
    assert "Timeout" in record.error


def test_invoke_connection_failure_captured():
    tool = make_tool(url="http://127.0.0.1:9/absent", required={})
    record = executor(timeout=0.5).invoke(tool, bind_params(tool, {}))
    assert record.status_code is None
    assert record.error


def test_invoke_truncates_large_bodies(mock):
    tool = make_tool(url=f"{mock.base_url}/big", required={})
    record = executor(max_body_bytes=100).invoke(tool, bind_params(tool, {}))
    assert record.truncated
    assert len(record.content.encode()) == 100
    assert record.json_value is None  # cut JSON no longer parses


def test_invoke_rejects_disallowed_method(mock):
    tool = make_tool(url=f"{mock.base_url}/items/{{item_id}}", method="DELETE")
    with pytest.raises(MethodDisallowed):
        executor().invoke(tool, bind_params(tool, {"item_id": "SKU-1"}))
    assert all(r.method == "GET" for r in mock.log)


def test_invoke_requires_complete_binding(mock):
    tool = make_tool(url=f"{mock.base_url}/items/{{item_id}}")
    with pytest.raises(ValueError):
        executor().invoke(tool, bind_params(tool, {}))


def test_record_json_round_trip(mock):
    from doc2tool.executor import InvocationRecord

    tool = make_tool(url=f"{mock.base_url}/items/{{item_id}}")
    record = executor().invoke(tool, bind_params(tool, {"item_id": "SKU-1"}))
    data = record.to_json()
    assert set(data) == {
        "status_code",
        "text",
        "json",
        "content",
        "x_error",
        "x_request_url",
        "x_elapsed_ms",
        "x_truncated",
    }
    back = InvocationRecord.from_json(data)
    assert back.core_capture() == record.core_capture()

import pytest

from conftest import make_tool
from doc2tool.docingest import ApiDocument, EndpointSpec
from doc2tool.executor import Executor, ExecutorConfig
from doc2tool.oracles import scripted_gateway
from doc2tool.paramkb import KbEntry, ParamKb
from doc2tool.refiner import RefinementTicket, Refiner, guard_harness
from doc2tool.testkit import MockRoute, start_mock
from doc2tool.toolsource import emit_tool_source
from doc2tool.validator import (
    ABNORMAL,
    MISSING_BASE_URL,
    PASSED,
    Validator,
)


@pytest.fixture(scope="module")
def mock():
    routes = [
        MockRoute(path="/items/{item_id}", expect_path={"item_id": "SKU-1"},
                  body={"item_id": "SKU-1"}),
        MockRoute(path="/ok", body={"fine": True}),
        MockRoute(path="/broken", fault="always500"),
        MockRoute(path="/ping", body={"pong": True}),
    ]
    server = start_mock(routes)
    yield server
    server.stop()


def make_refiner(tmp_path, docs=None, max_rounds=3):
    gateway = scripted_gateway(tmp_path / "fixtures")
    kb = ParamKb(gateway, tmp_path / "kb.jsonl")
    validator = Validator(Executor(ExecutorConfig(timeout=2.0, courtesy_delay=0.0)))
    return Refiner(gateway, validator, kb, docs or {}, max_rounds=max_rounds)


def donor(name, value, desc=None):
    return KbEntry(
        key_name=name,
        key_description=desc,
        value=value,
        source="doc_example",
        source_tool="donor_api.t",
        source_api="donor_api",
        tool_description="donor tool",
    )


def test_guard_harness_accepts_binding_edits_only():
    tool = make_tool(binding={"item_id": "a"})
    source = emit_tool_source(tool)
    assert guard_harness(tool, source)
    edited = source.replace("{'item_id': 'a'}", "{'item_id': 'b'}")
    assert guard_harness(tool, edited)


def test_guard_harness_rejects_tampered_capture():
    tool = make_tool()
    source = emit_tool_source(tool)
    tampered = source.replace("result_dict['text'] = r.text", "result_dict['text'] = ''")
    assert not guard_harness(tool, tampered)
    wrapped = "try:\n    pass\nexcept Exception:\n    pass\n" + source
    assert not guard_harness(tool, wrapped)


def test_ticket_candidates_require_parameter_label():
    from doc2tool.paramkb import ParamCandidate

    cand = {"item_id": [ParamCandidate(value="SKU-1", score=1.0, provenance=None)]}
    with pytest.raises(ValueError):
        RefinementTicket(
            tool_id="t",
            round=0,
            input_label=ABNORMAL,
            candidates=cand,
            doc_excerpt="",
            prior_source_digest="d",
        )
    RefinementTicket(
        tool_id="t",
        round=0,
        input_label="NoParameterValue",
        candidates=cand,
        doc_excerpt="",
        prior_source_digest="d",
    )


def test_refine_loop_returns_early_when_already_passing(mock, tmp_path):
    refiner = make_refiner(tmp_path)
    tool = make_tool(url=f"{mock.base_url}/ok", required={}, binding={})
    final, outcome, transcript = refiner.refine_loop(tool)
    assert final.status == "passed"
    assert outcome.final_label == PASSED
    assert transcript.rounds == [{"round": 0, "action": "validate", "label": PASSED}]


def test_refine_loop_fills_missing_value_from_donor(mock, tmp_path):
    refiner = make_refiner(tmp_path)
    refiner.kb._index(donor("item_id", "SKU-1", desc="Catalog item id"), persist=True)
    tool = make_tool(url=f"{mock.base_url}/items/{{item_id}}", binding=None)
    final, outcome, transcript = refiner.refine_loop(tool)
    assert final.status == "passed"
    assert final.example_binding == {"item_id": "SKU-1"}
    assert outcome.final_label == PASSED
    assert transcript.rounds[1]["label"] == PASSED
    recorded = [e for e in refiner.kb.entries if e.source == "refinement_success"]
    assert [e.value for e in recorded] == ["SKU-1"]


def test_refine_loop_rotates_off_wrong_value(mock, tmp_path):
    refiner = make_refiner(tmp_path)
    refiner.kb._index(donor("item_id", "SKU-1"), persist=True)
    tool = make_tool(
        url=f"{mock.base_url}/items/{{item_id}}", binding={"item_id": "SKU-404"}
    )
    final, outcome, _ = refiner.refine_loop(tool)
    assert final.status == "passed"
    assert final.example_binding == {"item_id": "SKU-1"}


def test_refine_loop_guesses_from_description_when_kb_empty(mock, tmp_path):
    refiner = make_refiner(tmp_path)
    tool = make_tool(url=f"{mock.base_url}/items/{{item_id}}", binding=None)
    param = tool.param("item_id")
    object.__setattr__(param.spec, "description", "Item SKU, e.g. 'SKU-1'.")
    final, outcome, _ = refiner.refine_loop(tool)
    assert final.status == "passed"
    assert final.example_binding == {"item_id": "SKU-1"}


def test_refine_loop_exhausts_budget_on_persistent_failure(mock, tmp_path):
    refiner = make_refiner(tmp_path, max_rounds=3)
    tool = make_tool(url=f"{mock.base_url}/broken", required={}, binding={})
    final, outcome, transcript = refiner.refine_loop(tool)
    assert final.status == "failed"
    assert outcome.final_label == ABNORMAL
    refine_rounds = [r for r in transcript.rounds if r["action"] == "refine"]
    assert len(refine_rounds) == 3


def test_refine_loop_keeps_best_label_across_rounds(tmp_path):
    refiner = make_refiner(tmp_path, max_rounds=2)
    tool = make_tool(url="/relative/{item_id}", binding={"item_id": "x"})
    final, outcome, _ = refiner.refine_loop(tool)
    assert final.status == "failed"
    assert outcome.final_label == MISSING_BASE_URL


def test_refine_loop_recovers_relative_url_with_doc_base(mock, tmp_path):
    doc = ApiDocument(
        source_id="sample_api",
        base_url=mock.base_url,
        endpoints=(EndpointSpec(name="ping", method="GET", url=("/ping",)),),
    )
    refiner = make_refiner(tmp_path, docs={"sample_api": doc})
    tool = make_tool(url="/ping", required={}, binding={})
    final, outcome, _ = refiner.refine_loop(tool)
    assert final.status == "passed"
    assert final.url_template == f"{mock.base_url}/ping"


def test_refine_once_enforces_round_budget(tmp_path):
    refiner = make_refiner(tmp_path, max_rounds=2)
    tool = make_tool()
    ticket = RefinementTicket(
        tool_id=tool.tool_id,
        round=2,
        input_label=ABNORMAL,
        candidates={},
        doc_excerpt="",
        prior_source_digest="d",
    )
    with pytest.raises(ValueError):
        refiner.refine_once(ticket, tool)


def test_transcript_written_as_json(tmp_path):
    from doc2tool.refiner import RefinementTranscript

    transcript = RefinementTranscript(tool_id="api.tool")
    transcript.rounds.append({"round": 0, "action": "validate", "label": PASSED})
    path = transcript.write(tmp_path)
    assert path.name == "api.tool.refinement.json"
    import json

    data = json.loads(path.read_text(encoding="utf-8"))
    assert data == {"tool_id": "api.tool", "rounds": transcript.rounds}

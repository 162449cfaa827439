import random

import pytest

from conftest import make_tool
from doc2tool.docingest import ApiDocument, EndpointSpec, ParameterSpec
from doc2tool.errors import UnknownApi
from doc2tool.executor import InvocationRecord
from doc2tool.oracles import OracleGateway, ScriptedCompletionBackend
from doc2tool.paramkb import (
    MAX_CANDIDATES,
    MAX_VALUES_PER_KEY,
    KbEntry,
    ParamKb,
    ParamQuery,
    canonical_value,
)


@pytest.fixture()
def gateway(tmp_path):
    return OracleGateway(
        completion_backend=ScriptedCompletionBackend(tmp_path / "fixtures")
    )


@pytest.fixture()
def kb(gateway, tmp_path):
    return ParamKb(gateway, tmp_path / "kb.jsonl")


def entry(name, value, api="api_a", tool="api_a.t", desc=None, tool_desc=""):
    return KbEntry(
        key_name=name,
        key_description=desc,
        value=value,
        source="doc_example",
        source_tool=tool,
        source_api=api,
        tool_description=tool_desc,
    )


def test_canonical_value_scalars_only():
    assert canonical_value("SKU-1") == "SKU-1"
    assert canonical_value(10) == "10"
    assert canonical_value(1.5) == "1.5"
    assert canonical_value(True) == "true"
    assert canonical_value(None) is None
    assert canonical_value("") is None
    assert canonical_value({"a": 1}) is None
    assert canonical_value([1]) is None
    assert canonical_value("x" * 201) is None


def test_index_dedupes_and_caps(kb):
    assert kb._index(entry("item_id", "SKU-1"), persist=True)
    assert not kb._index(entry("item_id", "SKU-1"), persist=True)
    for i in range(MAX_VALUES_PER_KEY + 5):
        kb._index(entry("limit", str(i)), persist=True)
    limits = [e for e in kb.entries if e.key_name == "limit"]
    assert len(limits) == MAX_VALUES_PER_KEY


def test_jsonl_round_trip(kb, gateway, tmp_path):
    kb._index(entry("item_id", "SKU-1", desc="Catalog item id"), persist=True)
    kb._index(entry("city_id", "AMS-01", api="api_b"), persist=True)
    reloaded = ParamKb(gateway, tmp_path / "kb.jsonl")
    assert reloaded.entries == kb.entries
    assert reloaded.known_apis == {"api_a", "api_b"}


def test_ingest_doc_examples_skips_parameters_without_examples(kb):
    doc = ApiDocument(
        source_id="shop",
        base_url="http://h",
        endpoints=(
            EndpointSpec(
                name="get_item",
                method="GET",
                url=("http://h/items/{item_id}",),
                required_parameters=(
                    ParameterSpec(name="item_id", example="SKU-1"),
                    ParameterSpec(name="q"),
                ),
                optional_parameters=(ParameterSpec(name="currency", example="EUR"),),
            ),
        ),
    )
    assert kb.ingest_doc_examples(doc) == 2
    assert {e.key_name for e in kb.entries} == {"item_id", "currency"}
    assert "shop" in kb.known_apis


def test_harvest_response_flattens_leaves(kb):
    tool = make_tool(name="get_city", source_id="cities")
    record = InvocationRecord(
        status_code=200,
        text="",
        json_value={
            "city": {"id": "AMS-01", "pop": 900000},
            "tags": ["port", "capital"],
            "geo": None,
        },
        content="",
    )
    assert kb.harvest_response(tool, record) == 4
    by_name = {e.key_name: e.value for e in kb.entries}
    assert by_name["id"] == "AMS-01"
    assert by_name["pop"] == "900000"
    assert by_name["tags"] == "capital"  # same leaf key, values dedupe by key
    descriptions = {e.key_description for e in kb.entries}
    assert "response field city.id of get_city" in descriptions


def test_harvest_response_ignores_non_json(kb):
    record = InvocationRecord(status_code=200, text="hi", json_value=None, content="hi")
    assert kb.harvest_response(make_tool(), record) == 0


def test_infer_exact_name_match_ranks_first(kb):
    kb._index(entry("item_id", "SKU-1", desc="Catalog item identifier"), persist=True)
    kb._index(entry("city_id", "AMS-01", api="api_b"), persist=True)
    kb._index(entry("limit", "10", api="api_c"), persist=True)
    candidates = kb.infer_candidates(ParamQuery(name="item_id"))
    assert candidates[0].value == "SKU-1"
    assert 0.0 <= candidates[-1].score <= candidates[0].score <= 1.0


def test_infer_description_similarity_bridges_names(kb):
    shared = "GlyTouCan accession identifier of the glycan."
    kb._index(entry("glytoucan_id", "G00048MO", desc=shared), persist=True)
    kb._index(entry("species", "human", api="api_b"), persist=True)
    candidates = kb.infer_candidates(ParamQuery(name="glycan_id", description=shared))
    assert candidates[0].value == "G00048MO"


def test_infer_dedupes_values_and_caps_at_ten(kb):
    for i in range(30):
        kb._index(entry("item_id", f"SKU-{i % 12}", tool=f"api_a.t{i}"), persist=True)
    candidates = kb.infer_candidates(ParamQuery(name="item_id"))
    values = [c.value for c in candidates]
    assert len(values) == MAX_CANDIDATES
    assert len(set(values)) == MAX_CANDIDATES


def test_infer_deterministic_without_rng(kb):
    for i in range(20):
        kb._index(entry(f"param_{i}", f"v{i}", tool=f"api_a.t{i}"), persist=True)
    query = ParamQuery(name="param_3", owner_description="some tool")
    first = [c.value for c in kb.infer_candidates(query)]
    second = [c.value for c in kb.infer_candidates(query)]
    assert first == second


def test_infer_seeded_rng_reproducible(kb):
    for i in range(20):
        kb._index(entry("item_id", f"SKU-{i}", tool=f"api_a.t{i}"), persist=True)
    query = ParamQuery(name="item_id")
    a = [c.value for c in kb.infer_candidates(query, rng=random.Random(0))]
    b = [c.value for c in kb.infer_candidates(query, rng=random.Random(0))]
    c = [c.value for c in kb.infer_candidates(query, rng=random.Random(1))]
    assert a == b
    assert set(a) != set() and (a != c or len(set(a)) <= 1)


def test_leave_one_api_out_masks_held_out_entries(kb):
    kb._index(entry("item_id", "SKU-1", api="shop"), persist=True)
    kb._index(entry("item_id", "SKU-9", api="inventory", tool="inventory.t"), persist=True)
    view = kb.leave_one_api_out("shop")
    assert all(e.source_api != "shop" for e in view.entries)
    values = [c.value for c in view.infer_candidates(ParamQuery(name="item_id"))]
    assert values == ["SKU-9"]


def test_leave_one_api_out_rejects_unknown(kb):
    kb._index(entry("item_id", "SKU-1"), persist=True)
    with pytest.raises(UnknownApi):
        kb.leave_one_api_out("never_seen")
    with pytest.raises(UnknownApi):
        kb.leave_one_api_out("")


def test_record_success_stores_validated_value(kb):
    tool = make_tool(name="get_item", source_id="shop")
    query = ParamQuery(name="item_id", description="Catalog item id")
    assert kb.record_success(query, "SKU-1", tool)
    assert not kb.record_success(query, {"not": "scalar"}, tool)
    stored = kb.entries[-1]
    assert stored.source == "refinement_success"
    assert stored.value == "SKU-1"

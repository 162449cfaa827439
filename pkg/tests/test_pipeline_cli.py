import json

import pytest

from doc2tool.cli import main, resolve_config, build_parser
from doc2tool.pipeline import PipelineConfig, run_all
from doc2tool.validator import PASSED


# --- pipeline stages over the documentation corpus --------------------------


def test_extract_writes_one_api_file_per_relevant_doc(pipeline_run):
    api_dir = pipeline_run.cfg.out_dir() / "api"
    files = sorted(p.name for p in api_dir.glob("*.api.json"))
    assert len(files) == len(pipeline_run.apis) == 12


def test_extract_carries_quality_labels(pipeline_run):
    qualities = {api.source_id: api.quality for api in pipeline_run.apis}
    assert set(qualities.values()) <= {"FullyOrganized", "SemiOrganized", "Unorganized"}
    assert qualities["legacy_pinger"] == "Unorganized"
    assert qualities["shop_catalog"] == "FullyOrganized"


def test_compile_writes_tool_files(pipeline_run):
    tools_dir = pipeline_run.cfg.out_dir() / "tools"
    files = list(tools_dir.glob("*.tool.json"))
    assert len(files) == len(pipeline_run.tools) == 12
    names = {t.name for t in pipeline_run.tools}
    assert len(names) == 12  # deduped


def test_round0_labels_cover_expected_failures(pipeline_run):
    labels = {
        tool_id: outcome.final_label
        for tool_id, outcome in pipeline_run.round0.items()
    }
    assert labels["shop_reviews.list_item_reviews"] == "NoParameterValue"
    assert labels["glyco_pathway.list_glycan_pathways"] == "NoParameterValue"
    assert labels["city_weather.get_current_weather"] == "WrongParameterValue"
    assert labels["legacy_pinger.ping"] == "MissingBaseURL"
    assert sum(1 for v in labels.values() if v == PASSED) == 8


def test_refinement_recovers_parameter_failures(pipeline_run):
    outcomes = pipeline_run.refined
    assert outcomes["shop_reviews.list_item_reviews"].final_label == PASSED
    assert outcomes["glyco_pathway.list_glycan_pathways"].final_label == PASSED
    assert outcomes["city_weather.get_current_weather"].final_label == PASSED
    assert outcomes["legacy_pinger.ping"].final_label == "MissingBaseURL"


def test_export_contains_only_passed_tools(pipeline_run):
    export_dir = pipeline_run.cfg.out_dir() / "export"
    emitted = {p.stem for p in export_dir.glob("*.py")}
    assert len(emitted) == len(pipeline_run.toolset.tools) == 11
    assert "ping" not in emitted
    assert (export_dir / "tools.openapi.json").exists()


def test_report_shape_and_counts(pipeline_run):
    report = pipeline_run.report
    assert set(report) == {
        "total_tools",
        "passed",
        "pass_rate",
        "labels",
        "causes",
        "per_quality",
    }
    assert report["total_tools"] == 12
    assert report["passed"] == 11
    assert report["labels"] == {"MissingBaseURL": 1, "PassedValidation": 11}
    assert report["pass_rate"] == pytest.approx(11 / 12)
    assert sum(b["passed"] + b["failed"] for b in report["per_quality"].values()) == 12
    report_md = (pipeline_run.cfg.out_dir() / "report.md").read_text(encoding="utf-8")
    assert "| Cause | Conservative | Aggressive |" in report_md


def test_mock_saw_only_get_requests(pipeline_run):
    assert pipeline_run.mock.log, "pipeline should have exercised the mock"
    assert {r.method for r in pipeline_run.mock.log} == {"GET"}


def test_report_stage_is_idempotent(pipeline_run):
    from doc2tool.pipeline import stage_report

    assert stage_report(pipeline_run.cfg) == pipeline_run.report


def test_run_all_matches_stagewise_run(pipeline_run, tmp_path):
    cfg = PipelineConfig(
        input=pipeline_run.cfg.input,
        out=str(tmp_path / "artifacts"),
        llm_backend=pipeline_run.cfg.llm_backend,
        courtesy_delay=0.02,
        timeout_secs=5,
    )
    report = run_all(cfg)
    assert report == pipeline_run.report


# --- CLI --------------------------------------------------------------------


def test_cli_requires_subcommand(capsys):
    assert main([]) == 2


def test_cli_rejects_unknown_stage():
    assert main(["explode"]) == 2


def test_cli_config_precedence(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(
        json.dumps({"out": "from_file", "jobs": 4, "allow_methods": ["GET", "POST"]})
    )
    args = build_parser().parse_args(
        ["extract", "--config", str(config), "--jobs", "2", "--allow-methods", "get"]
    )
    cfg = resolve_config(args)
    assert cfg.out == "from_file"
    assert cfg.jobs == 2
    assert cfg.allow_methods == ("GET",)


def test_cli_rejects_unknown_config_keys(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"not_a_field": 1}))
    assert main(["extract", "--config", str(config)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_cli_rejects_bad_config_file(tmp_path, capsys):
    missing = main(["extract", "--config", str(tmp_path / "absent.json")])
    assert missing == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["extract", "--config", str(bad)]) == 2


def test_cli_stage_failure_is_exit_3(tmp_path, capsys):
    code = main(
        [
            "extract",
            "--input",
            str(tmp_path / "nowhere"),
            "--out",
            str(tmp_path / "out"),
            "--llm-backend",
            f"scripted:{tmp_path}",
        ]
    )
    assert code == 3
    assert "extract failed" in capsys.readouterr().err


def test_cli_full_run_exit_0(pipeline_run, tmp_path):
    out = tmp_path / "cli_artifacts"
    code = main(
        [
            "run",
            "--input",
            pipeline_run.cfg.input,
            "--out",
            str(out),
            "--llm-backend",
            pipeline_run.cfg.llm_backend,
            "--timeout-secs",
            "5",
        ]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["passed"] == 11

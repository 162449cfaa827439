"""Stage orchestration over a shared artifact directory.

Each stage reads the previous stage's JSON artifacts and writes its own:

    api/{source_id}.api.json        extracted API descriptions
    tools/{tool_id}.tool.json       compiled tool specs
    validation/{tool_id}.validation.json
    refinement/{tool_id}.refinement.json
    kb.jsonl                        parameter knowledge base
    export/                         executable tool files + OpenAPI document
    report.json, report.md
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from . import docingest
from .compiler import (
    ToolSpec,
    compile_direct,
    compile_targeted,
    dedupe_names,
    enforce_method_policy,
    generate_fingerprints,
    read_tool,
    write_tool,
)
from .docingest import ApiDocument, read_api_document, write_api_document
from .errors import Doc2ToolError
from .executor import Executor, ExecutorConfig, InvocationRecord
from .exporter import ToolSet, emit_executable_tool, write_openapi
from .oracles import OracleGateway, live_gateway, scripted_gateway
from .paramkb import ParamKb
from .refiner import Refiner
from .service import DEFAULT_BIND, serve_tools
from .validator import PASSED, ValidationOutcome, Validator, estimate_causes

DOC_SUFFIXES = (".md", ".markdown", ".html", ".htm")


@dataclass
class PipelineConfig:
    input: str = ""
    out: str = "artifacts"
    jobs: int = 1
    allow_methods: tuple[str, ...] = ("GET",)
    max_rounds: int = 3
    timeout_secs: float = 50.0
    llm_backend: str = "live"  # "live" or "scripted:<fixtures dir>"
    embedding_backend: str = "hashing"
    kb: str | None = None
    mode: str = "direct"  # "direct" | "targeted" | "both"
    seed: int = 0
    bind: str = DEFAULT_BIND
    courtesy_delay: float = 0.2

    def out_dir(self) -> Path:
        return Path(self.out)

    def kb_path(self) -> Path:
        return Path(self.kb) if self.kb else self.out_dir() / "kb.jsonl"

    def rng(self) -> random.Random:
        return random.Random(self.seed)

    def gateway(self) -> OracleGateway:
        if self.llm_backend.startswith("scripted:"):
            return scripted_gateway(self.llm_backend.split(":", 1)[1])
        if self.llm_backend == "live":
            gw = live_gateway()
            if self.embedding_backend == "hashing":
                # Gateway default; discard the live embedding client.
                return OracleGateway(completion_backend=gw.completion_backend)
            return gw
        raise ValueError(f"unknown llm backend: {self.llm_backend!r}")

    def executor(self) -> Executor:
        return Executor(
            ExecutorConfig(
                timeout=self.timeout_secs,
                courtesy_delay=self.courtesy_delay,
                allow_methods=frozenset(self.allow_methods),
            )
        )


def _input_files(cfg: PipelineConfig) -> list[Path]:
    source = Path(cfg.input)
    if source.is_dir():
        return sorted(p for p in source.iterdir() if p.suffix.lower() in DOC_SUFFIXES)
    if source.exists():
        return [source]
    raise Doc2ToolError(f"input not found: {cfg.input}")


def _read_dir(path: Path, suffix: str) -> list[Path]:
    if not path.is_dir():
        return []
    return sorted(p for p in path.iterdir() if p.name.endswith(suffix))


# --- stages -----------------------------------------------------------------


def stage_extract(cfg: PipelineConfig) -> list[ApiDocument]:
    """Filter, classify, and extract every input doc that describes an API."""
    gateway = cfg.gateway()
    out = cfg.out_dir() / "api"
    out.mkdir(parents=True, exist_ok=True)

    def one(path: Path) -> ApiDocument | None:
        raw = docingest.load_document(str(path))
        if not docingest.has_api_content(raw, gateway):
            return None
        quality, analysis = docingest.classify_doc_quality(raw, gateway)
        api = docingest.extract_api_json(raw, gateway)
        api = replace(api, quality=quality, quality_analysis=analysis)
        write_api_document(api, out)
        return api

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        results = list(pool.map(one, _input_files(cfg)))
    return [api for api in results if api is not None]


def stage_compile(cfg: PipelineConfig) -> list[ToolSpec]:
    """Compile every extracted endpoint into a tool spec."""
    gateway = cfg.gateway() if cfg.mode in ("targeted", "both") else None
    out = cfg.out_dir() / "tools"
    out.mkdir(parents=True, exist_ok=True)

    tools: list[ToolSpec] = []
    for path in _read_dir(cfg.out_dir() / "api", ".api.json"):
        doc = read_api_document(path)
        if cfg.mode in ("direct", "both"):
            for endpoint in doc.endpoints:
                tools.append(compile_direct(endpoint, doc, allow_relative=True))
        if cfg.mode in ("targeted", "both"):
            for fp in generate_fingerprints(doc, gateway):
                tools.append(compile_targeted(fp, doc))

    allow = frozenset(cfg.allow_methods)
    tools = [enforce_method_policy(tool, allow) for tool in tools]
    tools = dedupe_names(tools)
    for tool in tools:
        write_tool(tool, out)
    return tools


def stage_validate(cfg: PipelineConfig) -> dict[str, ValidationOutcome]:
    """Run every compiled tool once and record its taxonomy label."""
    validator = Validator(cfg.executor(), cfg.gateway())
    out = cfg.out_dir() / "validation"
    out.mkdir(parents=True, exist_ok=True)
    tools_dir = cfg.out_dir() / "tools"

    def one(path: Path) -> tuple[str, ValidationOutcome]:
        tool = read_tool(path)
        outcome = validator.validate_tool(tool)
        status = "passed" if outcome.verified else "failed"
        write_tool(replace(tool, status=status), tools_dir)
        _write_outcome(outcome, out)
        return tool.tool_id, outcome

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        results = list(pool.map(one, _read_dir(tools_dir, ".tool.json")))
    return dict(results)


def stage_infer(cfg: PipelineConfig) -> ParamKb:
    """Materialize the parameter KB from doc examples and passing responses."""
    gateway = cfg.gateway()
    kb = ParamKb(gateway, cfg.kb_path())
    for path in _read_dir(cfg.out_dir() / "api", ".api.json"):
        kb.ingest_doc_examples(read_api_document(path))

    tools = {t.tool_id: t for t in map(read_tool, _read_dir(cfg.out_dir() / "tools", ".tool.json"))}
    for path in _read_dir(cfg.out_dir() / "validation", ".validation.json"):
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("final_label") != PASSED:
            continue
        tool = tools.get(data["tool_id"])
        if tool is None:
            continue
        for attempt in data.get("attempts", []):
            if attempt.get("label") == PASSED and attempt.get("record"):
                kb.harvest_response(tool, InvocationRecord.from_json(attempt["record"]))
                break
    return kb


def stage_refine(cfg: PipelineConfig) -> dict[str, ValidationOutcome]:
    """Run the refinement loop on every tool that failed validation."""
    gateway = cfg.gateway()
    validator = Validator(cfg.executor(), gateway)
    kb = ParamKb(gateway, cfg.kb_path())
    docs = {
        doc.source_id: doc
        for doc in map(read_api_document, _read_dir(cfg.out_dir() / "api", ".api.json"))
    }
    refiner = Refiner(gateway, validator, kb, docs, max_rounds=cfg.max_rounds)

    tools_dir = cfg.out_dir() / "tools"
    validation_dir = cfg.out_dir() / "validation"
    refinement_dir = cfg.out_dir() / "refinement"
    refinement_dir.mkdir(parents=True, exist_ok=True)

    outcomes: dict[str, ValidationOutcome] = {}
    for path in _read_dir(tools_dir, ".tool.json"):
        tool = read_tool(path)
        if tool.status == "passed":
            continue
        refined, outcome, transcript = refiner.refine_loop(tool)
        write_tool(refined, tools_dir)
        _write_outcome(outcome, validation_dir)
        transcript.write(refinement_dir)
        if outcome.verified:
            record = _passing_record(outcome)
            if record is not None:
                kb.harvest_response(refined, record)
        outcomes[tool.tool_id] = outcome
    return outcomes


def stage_export(cfg: PipelineConfig) -> ToolSet:
    """Emit executable files and the OpenAPI document for verified tools."""
    passed = [
        tool
        for tool in map(read_tool, _read_dir(cfg.out_dir() / "tools", ".tool.json"))
        if tool.status == "passed"
    ]
    toolset = ToolSet(tools=tuple(passed))
    out = cfg.out_dir() / "export"
    out.mkdir(parents=True, exist_ok=True)
    for tool in toolset.tools:
        emit_executable_tool(tool, out, timeout=cfg.timeout_secs)
    write_openapi(toolset, out)
    return toolset


def load_toolset(cfg: PipelineConfig) -> ToolSet:
    passed = [
        tool
        for tool in map(read_tool, _read_dir(cfg.out_dir() / "tools", ".tool.json"))
        if tool.status == "passed"
    ]
    return ToolSet(tools=tuple(passed))


def stage_serve(cfg: PipelineConfig) -> None:
    serve_tools(load_toolset(cfg), bind=cfg.bind, executor=cfg.executor())


def stage_report(cfg: PipelineConfig) -> dict[str, Any]:
    """Aggregate validation outcomes into pass rates and cause estimates."""
    quality_by_source: dict[str, str | None] = {}
    for path in _read_dir(cfg.out_dir() / "api", ".api.json"):
        doc = read_api_document(path)
        quality_by_source[doc.source_id] = doc.quality

    tools = {t.tool_id: t for t in map(read_tool, _read_dir(cfg.out_dir() / "tools", ".tool.json"))}
    labels: list[str] = []
    per_quality: dict[str, dict[str, int]] = {}
    for path in _read_dir(cfg.out_dir() / "validation", ".validation.json"):
        data = json.loads(path.read_text(encoding="utf-8"))
        label = data["final_label"]
        labels.append(label)
        tool = tools.get(data["tool_id"])
        quality = quality_by_source.get(tool.source_id) if tool else None
        bucket = per_quality.setdefault(quality or "unknown", {"passed": 0, "failed": 0})
        bucket["passed" if label == PASSED else "failed"] += 1

    causes = estimate_causes(labels)
    total = len(labels)
    passed = labels.count(PASSED)
    report = {
        "total_tools": total,
        "passed": passed,
        "pass_rate": (passed / total) if total else 0.0,
        "labels": {label: labels.count(label) for label in sorted(set(labels))},
        "causes": causes.to_json(),
        "per_quality": per_quality,
    }
    out = cfg.out_dir()
    (out / "report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
    (out / "report.md").write_text(_report_markdown(report), encoding="utf-8")
    return report


def _report_markdown(report: dict[str, Any]) -> str:
    lines = ["# Validation report", ""]
    lines.append(f"Tools: {report['total_tools']}, passed: {report['passed']} "
                 f"({report['pass_rate']:.1%})")
    lines.append("")
    lines.append("## Labels")
    lines.append("")
    for label, count in report["labels"].items():
        lines.append(f"- {label}: {count}")
    lines.append("")
    lines.append("## Failure cause estimates")
    lines.append("")
    lines.append("| Cause | Conservative | Aggressive |")
    lines.append("| --- | --- | --- |")
    conservative = report["causes"]["conservative"]
    aggressive = report["causes"]["aggressive"]
    for cause in conservative:
        lines.append(f"| {cause} | {conservative[cause]} | {aggressive[cause]} |")
    lines.append("")
    lines.append("## Per documentation quality")
    lines.append("")
    for quality, bucket in sorted(report["per_quality"].items()):
        lines.append(f"- {quality}: {bucket['passed']} passed, {bucket['failed']} failed")
    lines.append("")
    return "\n".join(lines)


# --- helpers ----------------------------------------------------------------


def _write_outcome(outcome: ValidationOutcome, out_dir: Path) -> Path:
    path = out_dir / f"{outcome.tool_id}.validation.json"
    path.write_text(json.dumps(outcome.to_json(), indent=2), encoding="utf-8")
    return path


def _passing_record(outcome: ValidationOutcome) -> InvocationRecord | None:
    for attempt in outcome.attempts:
        if attempt.label == PASSED and attempt.record is not None:
            return attempt.record
    return None


def run_all(cfg: PipelineConfig) -> dict[str, Any]:
    """extract → compile → validate → infer → refine → export → report."""
    stage_extract(cfg)
    stage_compile(cfg)
    stage_validate(cfg)
    stage_infer(cfg)
    stage_refine(cfg)
    stage_export(cfg)
    return stage_report(cfg)

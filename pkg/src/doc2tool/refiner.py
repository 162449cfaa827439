"""Refinement-validation loop: feed failing tools, their errors, docs, and
candidate parameter values to the code-fixing oracle, re-validate, and guard
the protected harness against tampering."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import prompts, toolsource
from .compiler import ToolSpec, normalize_url_template
from .docingest import ApiDocument
from .errors import GuardViolation, MalformedUrl, OracleError, UnparseableRevision
from .oracles import OracleGateway, OracleRequest
from .paramkb import ParamCandidate, ParamKb, ParamQuery
from .validator import (
    ABNORMAL,
    MISSING_BASE_URL,
    MISSING_ENDPOINT_PATH,
    NO_PARAMETER_VALUE,
    PASSED,
    WRONG_PARAMETER_VALUE,
    FAILED,
    Validator,
    ValidationOutcome,
)

DEFAULT_MAX_ROUNDS = 3
MAX_GUESS_HISTORY = 5

CANDIDATE_LABELS = (NO_PARAMETER_VALUE, WRONG_PARAMETER_VALUE)

# Labels ordered from closest-to-working to furthest; the report keeps the
# best-labeled outcome of a tool that never passed.
_LABEL_RANK = {
    PASSED: 0,
    FAILED: 1,
    WRONG_PARAMETER_VALUE: 2,
    ABNORMAL: 3,
    MISSING_ENDPOINT_PATH: 4,
    NO_PARAMETER_VALUE: 5,
    MISSING_BASE_URL: 6,
}


@dataclass(frozen=True)
class RefinementTicket:
    tool_id: str
    round: int
    input_label: str
    candidates: dict[str, list[ParamCandidate]]
    doc_excerpt: str
    prior_source_digest: str

    def __post_init__(self) -> None:
        if self.candidates and self.input_label not in CANDIDATE_LABELS:
            raise ValueError(
                f"candidates only apply to {CANDIDATE_LABELS}, got {self.input_label}"
            )


@dataclass
class RefinementTranscript:
    tool_id: str
    rounds: list[dict[str, Any]] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {"tool_id": self.tool_id, "rounds": self.rounds}

    def write(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / f"{self.tool_id}.refinement.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")
        return path


def guard_harness(original: ToolSpec, revised_source: str) -> bool:
    """Accept iff the protected region hash matches and no exception-
    swallowing construct surrounds the capture block."""
    if not toolsource.harness_intact(revised_source, original.harness_digest):
        return False
    return toolsource.harness_unwrapped(revised_source)


class Refiner:
    def __init__(
        self,
        gateway: OracleGateway,
        validator: Validator,
        kb: ParamKb,
        docs: dict[str, ApiDocument],
        max_rounds: int = DEFAULT_MAX_ROUNDS,
    ):
        self.gateway = gateway
        self.validator = validator
        self.kb = kb
        self.docs = docs
        self.max_rounds = max_rounds
        # Prior parameter guesses, threaded into retries: (tool_id, param) -> values.
        self._guess_history: dict[tuple[str, str], list[str]] = {}

    # --- ticket construction ------------------------------------------------

    def build_ticket(self, tool: ToolSpec, label: str, round_index: int) -> RefinementTicket:
        doc = self.docs.get(tool.source_id)
        doc_excerpt = json.dumps(doc.to_json())[:4000] if doc else ""
        source = toolsource.emit_tool_source(tool)
        candidates: dict[str, list[ParamCandidate]] = {}
        if label in CANDIDATE_LABELS:
            for name in self._target_params(tool, label):
                candidates[name] = self._candidates_for(tool, name)
        return RefinementTicket(
            tool_id=tool.tool_id,
            round=round_index,
            input_label=label,
            candidates=candidates,
            doc_excerpt=doc_excerpt,
            prior_source_digest=hashlib.sha256(source.encode("utf-8")).hexdigest(),
        )

    def _target_params(self, tool: ToolSpec, label: str) -> list[str]:
        binding = tool.example_binding or {}
        if label == NO_PARAMETER_VALUE:
            return [name for name in tool.required_names() if name not in binding]
        return list(tool.required_names())

    def _candidates_for(self, tool: ToolSpec, name: str) -> list[ParamCandidate]:
        param = tool.param(name)
        query = ParamQuery(
            name=name,
            description=param.spec.description if param else None,
            owner_tool=tool.tool_id,
            owner_description=tool.description,
        )
        found = self.kb.infer_candidates(query)
        if found:
            return found
        guess = self._guess_param(tool, name)
        if guess is None:
            return []
        return [
            ParamCandidate(
                value=guess,
                score=0.0,
                provenance=None,  # type: ignore[arg-type]  # direct model guess
            )
        ]

    def _guess_param(self, tool: ToolSpec, name: str) -> str | None:
        key = (tool.tool_id, name)
        history = self._guess_history.setdefault(key, [])
        param = tool.param(name)
        param_desc = f"{name}: {param.spec.description or '(no description)'}" if param else name
        try:
            guess = self.gateway.complete(
                OracleRequest(
                    task_kind="param_guess",
                    prompt=prompts.param_guess_prompt(
                        history[-MAX_GUESS_HISTORY:], tool.description, param_desc
                    ),
                )
            )
        except OracleError:
            return None
        guess_text = str(guess).strip()
        if not guess_text:
            return None
        history.append(guess_text)
        return guess_text

    # --- single refinement round --------------------------------------------

    def refine_once(self, ticket: RefinementTicket, tool: ToolSpec) -> ToolSpec:
        """One oracle-driven revision; harness guard applied before acceptance."""
        if ticket.round >= self.max_rounds:
            raise ValueError(f"round {ticket.round} exceeds budget {self.max_rounds}")
        source = toolsource.emit_tool_source(tool)
        doc = self.docs.get(tool.source_id)
        error_info = {
            "label": ticket.input_label,
            "round": ticket.round,
            "missing": self._target_params(tool, NO_PARAMETER_VALUE),
            "wrong": (
                list(tool.required_names())
                if ticket.input_label == WRONG_PARAMETER_VALUE
                else []
            ),
            "detail": f"validation labeled this tool {ticket.input_label}",
        }
        config = {
            "base_url": doc.base_url if doc else None,
            "headers": [],
            "info": {},
        }
        candidate_values = {
            name: [c.value for c in cands] for name, cands in ticket.candidates.items()
        }
        prompt = prompts.refine_prompt(
            error=json.dumps(error_info),
            api_doc=ticket.doc_excerpt or "{}",
            config=json.dumps(config),
            code=source,
            params=json.dumps(candidate_values),
        )
        revised_source = self.gateway.complete(
            OracleRequest(task_kind="refine", prompt=prompt)
        )
        if not isinstance(revised_source, str):
            raise UnparseableRevision(f"refine oracle returned {type(revised_source).__name__}")
        if not guard_harness(tool, revised_source):
            raise GuardViolation(f"{tool.tool_id}: protected harness region altered")
        parsed = toolsource.parse_tool_source(revised_source)
        return self._apply_revision(tool, parsed)

    def _apply_revision(self, tool: ToolSpec, parsed: toolsource.ParsedTool) -> ToolSpec:
        revised = replace(tool, example_binding=dict(parsed.binding))
        if parsed.url_template and parsed.url_template != tool.url_template:
            try:
                normalized = normalize_url_template(parsed.url_template)
            except MalformedUrl as exc:
                raise UnparseableRevision(str(exc)) from exc
            revised = replace(
                revised,
                url_template=normalized.template,
                path_params=normalized.path_params,
            )
        if parsed.docstring:
            first_line = parsed.docstring.strip().splitlines()[0].strip()
            if first_line:
                revised = replace(revised, description=first_line)
        return revised

    # --- full loop ----------------------------------------------------------

    def refine_loop(
        self, tool: ToolSpec, max_rounds: int | None = None
    ) -> tuple[ToolSpec, ValidationOutcome, RefinementTranscript]:
        """Alternate revision and validation until pass or budget exhaustion.

        Failed revisions are discarded; a passing revision replaces the tool
        and its novel parameter values are recorded in the KB.
        """
        budget = self.max_rounds if max_rounds is None else max_rounds
        transcript = RefinementTranscript(tool_id=tool.tool_id)
        outcome = self.validator.validate_tool(tool, round_index=0)
        transcript.rounds.append({"round": 0, "action": "validate", "label": outcome.final_label})
        if outcome.verified:
            return replace(tool, status="passed"), outcome, transcript

        best = outcome
        current = tool
        for round_index in range(1, budget + 1):
            ticket = self.build_ticket(current, best_label(best), round_index - 1)
            try:
                revised = self.refine_once(ticket, current)
            except (GuardViolation, UnparseableRevision, OracleError) as exc:
                transcript.rounds.append(
                    {"round": round_index, "action": "refine", "error": str(exc)}
                )
                continue
            revision_digest = hashlib.sha256(
                toolsource.emit_tool_source(revised).encode("utf-8")
            ).hexdigest()
            attempt = self.validator.validate_tool(revised, round_index=round_index)
            transcript.rounds.append(
                {
                    "round": round_index,
                    "action": "refine",
                    "ticket_label": ticket.input_label,
                    "revision_digest": revision_digest,
                    "label": attempt.final_label,
                }
            )
            best.attempts.extend(attempt.attempts)
            if attempt.verified:
                self._record_novel_values(tool, revised)
                final = replace(revised, status="passed")
                best.final_label = PASSED
                return final, best, transcript
            if _LABEL_RANK[attempt.final_label] < _LABEL_RANK[best.final_label]:
                best.final_label = attempt.final_label
            # Failed revision discarded; candidates for the next round are
            # drawn against the original tool state.

        return replace(current, status="failed"), best, transcript

    def _record_novel_values(self, original: ToolSpec, passed: ToolSpec) -> None:
        before = original.example_binding or {}
        after = passed.example_binding or {}
        for name, value in after.items():
            if before.get(name) == value:
                continue
            param = passed.param(name)
            self.kb.record_success(
                ParamQuery(
                    name=name,
                    description=param.spec.description if param else None,
                    owner_tool=passed.tool_id,
                    owner_description=passed.description,
                ),
                value,
                passed,
            )


def best_label(outcome: ValidationOutcome) -> str:
    return outcome.final_label

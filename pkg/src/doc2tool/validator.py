"""Decide whether a tool works: run it on its example binding, judge the
response, assign one of the seven taxonomy labels, and aggregate corpus-level
cause estimates."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

from . import prompts, toolsource
from .compiler import ToolSpec
from .errors import OracleError, UnparseableLabel
from .executor import JUDGE_WINDOW_BYTES, Executor, InvocationRecord, ParamBinding, bind_params
from .oracles import OracleGateway, OracleRequest

# Taxonomy labels (closed set).
PASSED = "PassedValidation"
FAILED = "FailedValidation"
ABNORMAL = "AbnormalResponse"
MISSING_ENDPOINT_PATH = "MissingEndpointPath"
MISSING_BASE_URL = "MissingBaseURL"
NO_PARAMETER_VALUE = "NoParameterValue"
WRONG_PARAMETER_VALUE = "WrongParameterValue"

ERROR_LABELS = (
    PASSED,
    FAILED,
    ABNORMAL,
    MISSING_ENDPOINT_PATH,
    MISSING_BASE_URL,
    NO_PARAMETER_VALUE,
    WRONG_PARAMETER_VALUE,
)

# Judge classes (closed set).
INFORMATION = "information"
CODE_ERROR = "code_error"
SERVER_ERROR = "server_error"
REQUEST_ERROR = "request_error"
JUDGE_CLASSES = (INFORMATION, CODE_ERROR, SERVER_ERROR, REQUEST_ERROR)

_RESIDUAL_PATH_RE = re.compile(r"/(?::[A-Za-z_]\w*|<[A-Za-z_]\w*>)")
_ERROR_KEYS = frozenset({"error", "errors", "exception", "traceback", "fault"})
_ERROR_MARKER_RE = re.compile(
    r"error|exception|invalid|not found|missing|unauthorized|forbidden", re.IGNORECASE
)


@dataclass(frozen=True)
class Attempt:
    round_index: int
    label: str
    judge: str | None
    record: InvocationRecord | None

    def to_json(self) -> dict[str, Any]:
        return {
            "round": self.round_index,
            "label": self.label,
            "judge": self.judge,
            "record": self.record.to_json() if self.record else None,
        }


@dataclass
class ValidationOutcome:
    tool_id: str
    attempts: list[Attempt] = field(default_factory=list)
    final_label: str = NO_PARAMETER_VALUE

    @property
    def verified(self) -> bool:
        return self.final_label == PASSED

    def to_json(self) -> dict[str, Any]:
        return {
            "tool_id": self.tool_id,
            "final_label": self.final_label,
            "verified": self.verified,
            "attempts": [a.to_json() for a in self.attempts],
        }


@dataclass(frozen=True)
class CauseEstimate:
    """Conservative/aggressive failure counts for the four cause categories:
    C1 missing documentation details, C2 bad URL path, C3 bad parameter
    values, C4 server side."""

    conservative: tuple[int, int, int, int]
    aggressive: tuple[int, int, int, int]

    def to_json(self) -> dict[str, Any]:
        names = ("MissingDocDetails", "BadUrlPath", "BadParamValues", "ServerSide")
        return {
            "conservative": dict(zip(names, self.conservative)),
            "aggressive": dict(zip(names, self.aggressive)),
        }


class Validator:
    def __init__(
        self,
        executor: Executor,
        gateway: OracleGateway | None = None,
        use_oracle_judge: bool = False,
    ):
        self.executor = executor
        self.gateway = gateway
        self.use_oracle_judge = use_oracle_judge and gateway is not None

    def validate_tool(
        self, tool: ToolSpec, round_index: int = 0, values: dict[str, Any] | None = None
    ) -> ValidationOutcome:
        """Single validation attempt; every path yields exactly one label."""
        outcome = ValidationOutcome(tool_id=tool.tool_id)
        attempt = self._attempt(tool, round_index, values)
        outcome.attempts.append(attempt)
        outcome.final_label = attempt.label
        return outcome

    def _attempt(
        self, tool: ToolSpec, round_index: int, values: dict[str, Any] | None
    ) -> Attempt:
        if values is None:
            if tool.example_binding is None:
                # No example values: labeled without any network call.
                return Attempt(round_index, NO_PARAMETER_VALUE, None, None)
            values = tool.example_binding
        binding = bind_params(tool, values)
        if binding.unbound_required:
            return Attempt(round_index, NO_PARAMETER_VALUE, None, None)
        if not tool.url_template.startswith(("http://", "https://")):
            return Attempt(round_index, MISSING_BASE_URL, None, None)
        if self._path_missing(tool.url_template):
            return Attempt(round_index, MISSING_ENDPOINT_PATH, None, None)

        record = self.executor.invoke(tool, binding)
        if record.status_code is None:
            return Attempt(round_index, ABNORMAL, None, record)

        status = record.status_code
        if status == 200:
            judge = self._judge(tool, record)
            if judge is None:
                return Attempt(round_index, ABNORMAL, None, record)
            label = PASSED if judge == INFORMATION else FAILED
            return Attempt(round_index, label, judge, record)
        if 400 <= status < 500:
            judge = self._judge(tool, record)
            if judge == REQUEST_ERROR:
                return Attempt(round_index, WRONG_PARAMETER_VALUE, judge, record)
            if judge == CODE_ERROR:
                label = (
                    MISSING_ENDPOINT_PATH
                    if self._residual_path(record.request_url)
                    else WRONG_PARAMETER_VALUE
                )
                return Attempt(round_index, label, judge, record)
            return Attempt(round_index, ABNORMAL, judge, record)
        return Attempt(round_index, ABNORMAL, None, record)

    @staticmethod
    def _path_missing(url_template: str) -> bool:
        rest = url_template.split("://", 1)[-1]
        path = rest.partition("/")[2]
        if not path.strip("/"):
            return True
        return bool(_RESIDUAL_PATH_RE.search("/" + path))

    @staticmethod
    def _residual_path(url: str) -> bool:
        return bool(_RESIDUAL_PATH_RE.search(url)) or "{" in url

    def _judge(self, tool: ToolSpec, record: InvocationRecord) -> str | None:
        """Judge a response; returns None when the oracle fails (the attempt
        is then recorded as unjudged AbnormalResponse)."""
        try:
            return self.judge_response(tool, record)
        except OracleError:
            return None
        except UnparseableLabel:
            return None

    def judge_response(self, tool: ToolSpec, record: InvocationRecord) -> str:
        if record.status_code is None:
            raise ValueError("cannot judge a record without a status code")
        if not self.use_oracle_judge:
            return rule_judge(record)
        excerpt = f"HTTP {record.status_code}\n{record.text[:JUDGE_WINDOW_BYTES]}"
        response = self.gateway.complete(
            OracleRequest(
                task_kind="judge",
                prompt=prompts.judge_prompt(
                    tool.description, excerpt, toolsource.emit_tool_source(tool)
                ),
                response_schema={
                    "type": "object",
                    "properties": {"response_type": {"enum": list(JUDGE_CLASSES)}},
                    "required": ["response_type"],
                },
            )
        )
        label = response.get("response_type") if isinstance(response, dict) else None
        if label not in JUDGE_CLASSES:
            raise UnparseableLabel(f"judge returned {response!r}")
        return label


def rule_judge(record: InvocationRecord) -> str:
    """Deterministic fallback judge.

    Auth failures and 5xx are server errors; valid JSON with at least one
    non-error key is information; error-marked or empty bodies are request
    errors."""
    status = record.status_code or 0
    if status in (401, 403):
        return SERVER_ERROR
    if status >= 500:
        return SERVER_ERROR
    value = record.json_value
    if isinstance(value, dict):
        if not value:
            return REQUEST_ERROR
        if any(key.lower() in _ERROR_KEYS for key in value):
            return REQUEST_ERROR
        return INFORMATION
    if isinstance(value, list):
        return INFORMATION if value else REQUEST_ERROR
    if value is not None:
        return INFORMATION
    text = record.text.strip()
    if not text:
        return REQUEST_ERROR
    if _ERROR_MARKER_RE.search(text[:JUDGE_WINDOW_BYTES]):
        return REQUEST_ERROR
    return INFORMATION


def estimate_causes(labels: list[str] | Counter) -> CauseEstimate:
    """Map a label multiset onto conservative/aggressive cause counts."""
    counts = Counter(labels)
    mep = counts[MISSING_ENDPOINT_PATH]
    mbu = counts[MISSING_BASE_URL]
    npv = counts[NO_PARAMETER_VALUE]
    wpv = counts[WRONG_PARAMETER_VALUE]
    fv = counts[FAILED]
    ar = counts[ABNORMAL]
    conservative = (0, mep, wpv + fv, 0)
    aggressive = (
        mbu + npv,
        mep + mbu,
        wpv + fv + npv + ar,
        fv + ar,
    )
    return CauseEstimate(conservative=conservative, aggressive=aggressive)

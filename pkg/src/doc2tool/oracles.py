"""Gateway to the text-generation and embedding models.

Every model call in the pipeline goes through :class:`OracleGateway`. Three
completion backends exist:

- ``LiveCompletionBackend``: OpenAI-style chat endpoint, retried with backoff.
- ``ScriptedCompletionBackend``: fixtures keyed by (task_kind, prompt digest);
  a missing fixture raises instead of improvising.
- ``RuleCompletionBackend``: deterministic heuristics for the refine and
  param_guess tasks, so the refinement loop runs fully offline.

The deterministic embedding backend hashes character trigrams into a fixed
256-dim vector, L2-normalized, so identical text always yields identical
vectors across runs and platforms.
"""

from __future__ import annotations

import ast
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import requests

from .errors import (
    BackendUnavailable,
    EmptyText,
    MissingCredential,
    ScriptedFixtureMissing,
)

TASK_KINDS = ("extract", "judge", "refine", "fingerprint", "param_guess", "doc_quality")

EMBED_DIMS = 256

ENV_API_KEY = "DOC2TOOL_LLM_API_KEY"
ENV_BASE_URL = "DOC2TOOL_LLM_BASE_URL"
ENV_MODEL = "DOC2TOOL_LLM_MODEL"


@dataclass(frozen=True)
class OracleRequest:
    """One completion request, tagged with the task that produced it."""

    task_kind: str
    prompt: str
    response_schema: dict[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"unknown task_kind: {self.task_kind!r}")
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


@dataclass(frozen=True)
class EmbeddingVector:
    dims: int
    values: tuple[float, ...]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    va, vb = a.as_array(), b.as_array()
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def canonical_prompt(prompt: str) -> str:
    """Normalize line endings and trailing whitespace before hashing."""
    lines = prompt.replace("\r\n", "\n").split("\n")
    return "\n".join(line.rstrip() for line in lines).strip()


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(canonical_prompt(prompt).encode("utf-8")).hexdigest()


# --- completion backends ----------------------------------------------------


class ScriptedCompletionBackend:
    """Returns fixtures from ``{dir}/{task_kind}/{prompt_digest}.json``."""

    is_live = False

    def __init__(self, fixtures_dir: str | Path):
        self.fixtures_dir = Path(fixtures_dir)

    def _path(self, request: OracleRequest) -> Path:
        return self.fixtures_dir / request.task_kind / f"{prompt_digest(request.prompt)}.json"

    def complete(self, request: OracleRequest) -> Any:
        path = self._path(request)
        if not path.exists():
            raise ScriptedFixtureMissing(
                f"no fixture for task_kind={request.task_kind} "
                f"digest={prompt_digest(request.prompt)}"
            )
        return json.loads(path.read_text(encoding="utf-8"))

    def store(self, request: OracleRequest, response: Any) -> Path:
        """Author a fixture for this request (used by the testkit)."""
        path = self._path(request)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(response, indent=2, sort_keys=True), encoding="utf-8")
        return path


class LiveCompletionBackend:
    """OpenAI-style chat completions with 3 attempts and exponential backoff."""

    is_live = True

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout: float = 120.0,
        max_attempts: int = 3,
        backoff_start: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url or os.environ.get(ENV_BASE_URL, "")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.model = model or os.environ.get(ENV_MODEL, "")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_start = backoff_start
        self._sleep = sleep

    def complete(self, request: OracleRequest) -> Any:
        if not self.api_key:
            raise MissingCredential(f"set {ENV_API_KEY} to use the live backend")
        if not self.base_url:
            raise BackendUnavailable(f"set {ENV_BASE_URL} to use the live backend")
        payload: dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
        }
        if request.response_schema is not None:
            payload["response_format"] = {
                "type": "json_schema",
                "json_schema": {"name": request.task_kind, "schema": request.response_schema},
            }
        delay = self.backoff_start
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(delay)
                delay *= 2
            try:
                resp = requests.post(
                    self.base_url.rstrip("/") + "/chat/completions",
                    json=payload,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=self.timeout,
                )
                if resp.status_code >= 500 or resp.status_code == 429:
                    last_error = BackendUnavailable(f"status {resp.status_code}")
                    continue
                resp.raise_for_status()
                content = resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                continue
            if request.response_schema is not None:
                return json.loads(content)
            return content
        raise BackendUnavailable(f"live backend failed after {self.max_attempts} attempts") from last_error


class RuleCompletionBackend:
    """Deterministic offline heuristics for refine and param_guess tasks.

    The refine rule edits the example-binding literal of the submitted tool
    source using the candidate values embedded in the prompt; the param_guess
    rule extracts a plausible token from the parameter description, avoiding
    previously failed guesses.
    """

    is_live = False

    def complete(self, request: OracleRequest) -> Any:
        if request.task_kind == "refine":
            return self._refine(request.prompt)
        if request.task_kind == "param_guess":
            return self._param_guess(request.prompt)
        raise BackendUnavailable(
            f"rule backend does not handle task_kind={request.task_kind}"
        )

    @staticmethod
    def _section(prompt: str, header: str, next_header: str | None) -> str:
        # The prompt preamble may mention a header (e.g. "Configuration:"),
        # so the real section is the last occurrence.
        start = prompt.rindex(header) + len(header)
        end = prompt.index(next_header, start) if next_header else len(prompt)
        return prompt[start:end].strip()

    def _refine(self, prompt: str) -> str:
        error = json.loads(self._section(prompt, "Error Information:", "API Documentation:"))
        config = json.loads(self._section(prompt, "Configuration:", "Code to fix:"))
        code = self._section(prompt, "Code to fix:", "Candidate Parameter Values:")
        params_text = self._section(prompt, "Candidate Parameter Values:", None)
        candidates: dict[str, list[Any]] = json.loads(params_text) if params_text else {}
        round_index = int(error.get("round", 0))

        binding = _read_binding_literal(code)
        for name in error.get("missing", []):
            values = candidates.get(name, [])
            if values:
                binding[name] = values[round_index % len(values)]
        for name in error.get("wrong", []):
            values = [v for v in candidates.get(name, []) if v != binding.get(name)]
            if values:
                binding[name] = values[round_index % len(values)]
        code = _write_binding_literal(code, binding)

        base_url = config.get("base_url")
        if base_url and error.get("label") == "MissingBaseURL":
            code = re.sub(
                r"(url = f?['\"])(/[^'\"]*)",
                lambda m: m.group(1) + base_url.rstrip("/") + m.group(2),
                code,
                count=1,
            )
        return code

    def _param_guess(self, prompt: str) -> str:
        history_text = self._section(prompt, "***history start", "***history end")
        history = [h for h in history_text.splitlines() if h and h != "(none)"]
        param_desc = self._section(prompt, "Parameter Description:", "Your Guess:")
        # Quoted tokens in the description are the most likely literal values.
        tokens = re.findall(r"['\"`]([^'\"`\n]{1,60})['\"`]", param_desc)
        tokens += re.findall(r"e\.g\.?,?\s+([\w.,;:-]+)", param_desc)
        for token in tokens:
            if token not in history:
                return token
        return f"guess{len(history)}"


def _read_binding_literal(code: str) -> dict[str, Any]:
    match = re.search(r"^EXAMPLE_BINDING = (.+)$", code, flags=re.MULTILINE)
    if not match:
        return {}
    return ast.literal_eval(match.group(1))


def _write_binding_literal(code: str, binding: dict[str, Any]) -> str:
    return re.sub(
        r"^EXAMPLE_BINDING = .+$",
        "EXAMPLE_BINDING = " + repr(binding),
        code,
        flags=re.MULTILINE,
    )


# --- embedding backends -----------------------------------------------------


class HashingEmbeddingBackend:
    """Character-trigram hashing into a fixed 256-dim unit vector."""

    is_live = False

    def __init__(self, dims: int = EMBED_DIMS):
        self.dims = dims

    def embed(self, text: str) -> EmbeddingVector:
        stripped = text.strip()
        if not stripped:
            raise EmptyText("cannot embed empty text")
        padded = "\x02" + stripped.lower() + "\x03"
        acc = np.zeros(self.dims, dtype=np.float64)
        for i in range(len(padded) - 2):
            digest = hashlib.sha256(padded[i : i + 3].encode("utf-8")).digest()
            index = int.from_bytes(digest[:4], "little") % self.dims
            sign = 1.0 if digest[4] & 1 else -1.0
            acc[index] += sign
        norm = np.linalg.norm(acc)
        if norm > 0:
            acc /= norm
        return EmbeddingVector(dims=self.dims, values=tuple(float(v) for v in acc))


class LiveEmbeddingBackend:
    """OpenAI-style /embeddings endpoint."""

    is_live = True

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout: float = 60.0,
    ):
        self.base_url = base_url or os.environ.get(ENV_BASE_URL, "")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.model = model or os.environ.get(ENV_MODEL, "")
        self.timeout = timeout

    def embed(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise EmptyText("cannot embed empty text")
        if not self.api_key:
            raise MissingCredential(f"set {ENV_API_KEY} to use the live backend")
        resp = requests.post(
            self.base_url.rstrip("/") + "/embeddings",
            json={"model": self.model, "input": text},
            headers={"Authorization": f"Bearer {self.api_key}"},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        values = resp.json()["data"][0]["embedding"]
        return EmbeddingVector(dims=len(values), values=tuple(float(v) for v in values))


# --- gateway ----------------------------------------------------------------


@dataclass
class OracleGateway:
    """Routes requests to completion/embedding backends.

    ``per_task`` overrides the default completion backend for specific task
    kinds. Live requests are capped by an in-flight semaphore (default 4).
    """

    completion_backend: Any = None
    embedding_backend: Any = None
    per_task: dict[str, Any] = field(default_factory=dict)
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.embedding_backend is None:
            self.embedding_backend = HashingEmbeddingBackend()
        self._live_slots = threading.Semaphore(self.max_in_flight)

    def _backend_for(self, task_kind: str) -> Any:
        backend = self.per_task.get(task_kind, self.completion_backend)
        if backend is None:
            raise BackendUnavailable(f"no completion backend for task_kind={task_kind}")
        return backend

    def complete(self, request: OracleRequest) -> Any:
        backend = self._backend_for(request.task_kind)
        if getattr(backend, "is_live", False):
            with self._live_slots:
                return backend.complete(request)
        return backend.complete(request)

    def embed(self, text: str) -> EmbeddingVector:
        backend = self.embedding_backend
        if getattr(backend, "is_live", False):
            with self._live_slots:
                return backend.embed(text)
        return backend.embed(text)


def scripted_gateway(fixtures_dir: str | Path) -> OracleGateway:
    """Offline gateway: fixtures for extraction-style tasks, rules for the
    refinement loop, hashing embeddings."""
    scripted = ScriptedCompletionBackend(fixtures_dir)
    rules = RuleCompletionBackend()
    return OracleGateway(
        completion_backend=scripted,
        per_task={"refine": rules, "param_guess": rules},
    )


def live_gateway() -> OracleGateway:
    backend = LiveCompletionBackend()
    return OracleGateway(
        completion_backend=backend,
        embedding_backend=LiveEmbeddingBackend(),
    )

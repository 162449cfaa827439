"""Parameter knowledge base: donor (name, description, value) records from
documentation examples and validated responses, indexed by trigram-hash
embeddings, used to infer candidate values for unknown parameters."""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .compiler import ToolSpec
from .docingest import ApiDocument
from .errors import UnknownApi
from .executor import InvocationRecord
from .oracles import EmbeddingVector, OracleGateway, cosine

MAX_VALUE_CHARS = 200
MAX_VALUES_PER_KEY = 20  # per (tool, leaf name)
RETRIEVE_POOL = 50
MAX_CANDIDATES = 10

NAME_WEIGHT = 0.6
TOOL_WEIGHT = 0.4

SOURCE_DOC_EXAMPLE = "doc_example"
SOURCE_RESPONSE_HARVEST = "response_harvest"
SOURCE_REFINEMENT_SUCCESS = "refinement_success"


def canonical_value(value: Any) -> str | None:
    """Scalar leaves as canonical strings; None for non-scalars/oversize."""
    if value is None:
        return None
    if isinstance(value, bool):
        text = "true" if value else "false"
    elif isinstance(value, (int, float)):
        text = json.dumps(value)
    elif isinstance(value, str):
        text = value
    else:
        return None
    if not text or len(text) > MAX_VALUE_CHARS:
        return None
    return text


@dataclass(frozen=True)
class KbEntry:
    key_name: str
    value: str
    source: str
    source_tool: str
    source_api: str
    key_description: str | None = None
    tool_description: str = ""

    def to_json(self) -> dict[str, Any]:
        return {
            "key_name": self.key_name,
            "key_description": self.key_description,
            "value": self.value,
            "source": self.source,
            "source_tool": self.source_tool,
            "source_api": self.source_api,
            "tool_description": self.tool_description,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "KbEntry":
        return cls(
            key_name=data["key_name"],
            key_description=data.get("key_description"),
            value=data["value"],
            source=data["source"],
            source_tool=data["source_tool"],
            source_api=data["source_api"],
            tool_description=data.get("tool_description", ""),
        )


@dataclass(frozen=True)
class ParamQuery:
    name: str
    description: str | None = None
    owner_tool: str = ""
    owner_description: str = ""


@dataclass(frozen=True)
class ParamCandidate:
    value: str
    score: float
    provenance: KbEntry


class ParamKb:
    """Append-only JSONL store with an in-memory vector index rebuilt on load.

    Vectors are derived from the stored texts through the gateway's embed
    operation, so with the hashing backend inference is a pure function of
    (KB contents, query). Writes are serialized through a single lock.
    """

    def __init__(self, gateway: OracleGateway, path: str | Path | None = None):
        self.gateway = gateway
        self.path = Path(path) if path is not None else None
        self._entries: list[KbEntry] = []
        self._name_vecs: list[EmbeddingVector] = []
        self._desc_vecs: list[EmbeddingVector | None] = []
        self._tool_vecs: list[EmbeddingVector | None] = []
        self._keys: set[tuple[str, str, str]] = set()  # (tool, name, value)
        self._per_key_counts: dict[tuple[str, str], int] = {}
        self._apis: set[str] = set()
        self._write_lock = threading.Lock()
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._index(KbEntry.from_json(json.loads(line)), persist=False)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> tuple[KbEntry, ...]:
        return tuple(self._entries)

    @property
    def known_apis(self) -> frozenset[str]:
        return frozenset(self._apis)

    def register_api(self, source_id: str) -> None:
        self._apis.add(source_id)

    def _index(self, entry: KbEntry, persist: bool) -> bool:
        key = (entry.source_tool, entry.key_name, entry.value)
        per_key = (entry.source_tool, entry.key_name)
        with self._write_lock:
            if key in self._keys:
                return False
            if self._per_key_counts.get(per_key, 0) >= MAX_VALUES_PER_KEY:
                return False
            self._keys.add(key)
            self._per_key_counts[per_key] = self._per_key_counts.get(per_key, 0) + 1
            self._entries.append(entry)
            self._apis.add(entry.source_api)
            self._name_vecs.append(self.gateway.embed(entry.key_name))
            self._desc_vecs.append(
                self.gateway.embed(entry.key_description)
                if entry.key_description
                else None
            )
            self._tool_vecs.append(
                self.gateway.embed(entry.tool_description)
                if entry.tool_description
                else None
            )
            if persist and self.path is not None:
                with self.path.open("a", encoding="utf-8") as handle:
                    handle.write(json.dumps(entry.to_json()) + "\n")
        return True

    # --- ingestion ----------------------------------------------------------

    def ingest_doc_examples(self, doc: ApiDocument) -> int:
        """One entry per (parameter, example) pair with an example present."""
        self.register_api(doc.source_id)
        added = 0
        for endpoint in doc.endpoints:
            tool_id = f"{doc.source_id}.{endpoint.name}"
            tool_desc = endpoint.description or endpoint.name
            for spec in endpoint.required_parameters + endpoint.optional_parameters:
                value = canonical_value(spec.example)
                if value is None:
                    continue
                added += self._index(
                    KbEntry(
                        key_name=spec.name,
                        key_description=spec.description,
                        value=value,
                        source=SOURCE_DOC_EXAMPLE,
                        source_tool=tool_id,
                        source_api=doc.source_id,
                        tool_description=tool_desc,
                    ),
                    persist=True,
                )
        return added

    def harvest_response(self, tool: ToolSpec, record: InvocationRecord) -> int:
        """Flatten a verified tool's JSON response into donor entries.

        Leaves are keyed by their last path segment; array indices are kept in
        the stored dotted path but dropped from the key name."""
        if record.json_value is None:
            return 0
        added = 0
        for path, value in _flatten(record.json_value):
            text = canonical_value(value)
            if text is None:
                continue
            leaf = _leaf_name(path)
            if not leaf:
                continue
            added += self._index(
                KbEntry(
                    key_name=leaf,
                    key_description=f"response field {path} of {tool.name}",
                    value=text,
                    source=SOURCE_RESPONSE_HARVEST,
                    source_tool=tool.tool_id,
                    source_api=tool.source_id,
                    tool_description=tool.description,
                ),
                persist=True,
            )
        return added

    def record_success(self, query: ParamQuery, value: Any, tool: ToolSpec) -> bool:
        """Store a parameter value that a passing tool run just validated."""
        text = canonical_value(value)
        if text is None:
            return False
        return self._index(
            KbEntry(
                key_name=query.name,
                key_description=query.description,
                value=text,
                source=SOURCE_REFINEMENT_SUCCESS,
                source_tool=tool.tool_id,
                source_api=tool.source_id,
                tool_description=tool.description,
            ),
            persist=True,
        )

    # --- inference ----------------------------------------------------------

    def infer_candidates(
        self,
        query: ParamQuery,
        exclude_api: str | None = None,
        rng: random.Random | None = None,
    ) -> list[ParamCandidate]:
        """Up to 10 deduplicated candidate values, ranked by similarity.

        Score = 0.6 * max(name cosine, description cosine)
              + 0.4 * tool-description cosine.
        Deterministic top-k by default; pass ``rng`` for seeded sampling from
        the retrieval pool instead.
        """
        if not self._entries:
            return []
        name_vec = self.gateway.embed(query.name)
        desc_vec = self.gateway.embed(query.description) if query.description else None
        tool_vec = (
            self.gateway.embed(query.owner_description)
            if query.owner_description
            else None
        )

        scored: list[tuple[float, float, int]] = []
        for i, entry in enumerate(self._entries):
            if exclude_api is not None and entry.source_api == exclude_api:
                continue
            sims = [cosine(name_vec, self._name_vecs[i])]
            if desc_vec is not None and self._desc_vecs[i] is not None:
                sims.append(cosine(desc_vec, self._desc_vecs[i]))
            param_sim = max(sims)
            tool_sim = 0.0
            if tool_vec is not None and self._tool_vecs[i] is not None:
                tool_sim = cosine(tool_vec, self._tool_vecs[i])
            scored.append((param_sim, tool_sim, i))

        scored.sort(key=lambda item: (-(NAME_WEIGHT * item[0] + TOOL_WEIGHT * item[1]), item[2]))
        pool = scored[:RETRIEVE_POOL]
        if rng is not None:
            pool = pool.copy()
            rng.shuffle(pool)

        seen_values: set[str] = set()
        candidates: list[ParamCandidate] = []
        for param_sim, tool_sim, i in pool:
            entry = self._entries[i]
            if entry.value in seen_values:
                continue
            seen_values.add(entry.value)
            score = NAME_WEIGHT * param_sim + TOOL_WEIGHT * tool_sim
            candidates.append(
                ParamCandidate(
                    value=entry.value,
                    score=max(0.0, min(1.0, score)),
                    provenance=entry,
                )
            )
            if len(candidates) == MAX_CANDIDATES:
                break
        if rng is None:
            candidates.sort(key=lambda c: -c.score)
        return candidates

    def leave_one_api_out(self, api: str) -> "KbView":
        """Read-only view masking every entry sourced from the held-out API."""
        if not api:
            raise UnknownApi("empty API id")
        if api not in self._apis:
            raise UnknownApi(f"API never seen by this KB: {api!r}")
        return KbView(self, api)


@dataclass(frozen=True)
class KbView:
    kb: ParamKb
    held_out: str

    @property
    def entries(self) -> tuple[KbEntry, ...]:
        return tuple(e for e in self.kb.entries if e.source_api != self.held_out)

    def infer_candidates(
        self, query: ParamQuery, rng: random.Random | None = None
    ) -> list[ParamCandidate]:
        return self.kb.infer_candidates(query, exclude_api=self.held_out, rng=rng)


def _flatten(value: Any, prefix: str = "") -> Iterable[tuple[str, Any]]:
    if isinstance(value, dict):
        for key, item in value.items():
            path = f"{prefix}.{key}" if prefix else str(key)
            yield from _flatten(item, path)
    elif isinstance(value, list):
        for i, item in enumerate(value):
            path = f"{prefix}.{i}" if prefix else str(i)
            yield from _flatten(item, path)
    else:
        yield prefix, value


def _leaf_name(path: str) -> str:
    # Trailing array indices are dropped so the key stays a field name.
    segments = [s for s in path.split(".") if not s.isdigit()]
    return segments[-1] if segments else ""

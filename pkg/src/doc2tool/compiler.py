"""Compile endpoint descriptions into executable tool specs.

A ToolSpec is the language-neutral IR of one wrapped endpoint: normalized URL
template, parameter bindings with required flags, an example binding when the
documentation provides one, and the digest of the protected harness region
that emitted tool files must carry.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import prompts
from .docingest import ApiDocument, EndpointSpec, ParameterSpec
from .errors import MalformedUrl, MethodDisallowed, MissingBaseUrl
from .oracles import OracleGateway, OracleRequest

MAX_FINGERPRINTS = 10

DEFAULT_ALLOW_METHODS = frozenset({"GET"})

STATUS_UNVALIDATED = "unvalidated"
STATUS_PASSED = "passed"
STATUS_FAILED = "failed"

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_]\w*)\}")
_COLON_PARAM_RE = re.compile(r"(?<=/):([A-Za-z_]\w*)")
_ANGLE_PARAM_RE = re.compile(r"<([A-Za-z_]\w*)>")
_OPTIONAL_SUFFIX_RE = re.compile(r"\[\.\{([A-Za-z_]\w*)\}\]")


@dataclass(frozen=True)
class NormalizedUrl:
    template: str
    path_params: tuple[str, ...]
    optional_path_params: tuple[str, ...] = ()
    query_seeds: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class ToolParam:
    spec: ParameterSpec
    required: bool
    location: str  # "path" | "query" | "header"

    def to_json(self) -> dict[str, Any]:
        return {"spec": self.spec.to_json(), "required": self.required, "location": self.location}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ToolParam":
        return cls(
            spec=ParameterSpec.from_json(data["spec"]),
            required=data["required"],
            location=data["location"],
        )


@dataclass(frozen=True)
class ToolSpec:
    tool_id: str
    name: str
    description: str
    method: str
    url_template: str
    path_params: tuple[str, ...]
    params: tuple[ToolParam, ...]
    provenance: str  # "direct" | "targeted"
    source: tuple[str, str]  # (source_id, endpoint name)
    harness_digest: str
    example_binding: dict[str, Any] | None = None
    optional_path_suffix: str | None = None
    frozen_params: dict[str, Any] = field(default_factory=dict)
    status: str = STATUS_UNVALIDATED
    tls_verify: bool = True

    def __post_init__(self) -> None:
        in_template = tuple(dict.fromkeys(_PLACEHOLDER_RE.findall(self.url_template)))
        if set(in_template) != set(self.path_params):
            raise MalformedUrl(
                f"placeholders {in_template} do not match path_params {self.path_params}"
            )

    @property
    def source_id(self) -> str:
        return self.source[0]

    def param(self, name: str) -> ToolParam | None:
        for p in self.params:
            if p.spec.name == name:
                return p
        return None

    def required_names(self) -> tuple[str, ...]:
        return tuple(p.spec.name for p in self.params if p.required)

    def query_params(self) -> tuple[ToolParam, ...]:
        return tuple(p for p in self.params if p.location == "query")

    def header_params(self) -> tuple[ToolParam, ...]:
        return tuple(p for p in self.params if p.location == "header")

    def to_json(self) -> dict[str, Any]:
        # Stable field order for diffability.
        return {
            "tool_id": self.tool_id,
            "name": self.name,
            "description": self.description,
            "method": self.method,
            "url_template": self.url_template,
            "path_params": list(self.path_params),
            "params": [p.to_json() for p in self.params],
            "example_binding": self.example_binding,
            "optional_path_suffix": self.optional_path_suffix,
            "frozen_params": self.frozen_params,
            "provenance": self.provenance,
            "source": list(self.source),
            "harness_digest": self.harness_digest,
            "status": self.status,
            "tls_verify": self.tls_verify,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ToolSpec":
        return cls(
            tool_id=data["tool_id"],
            name=data["name"],
            description=data["description"],
            method=data["method"],
            url_template=data["url_template"],
            path_params=tuple(data["path_params"]),
            params=tuple(ToolParam.from_json(p) for p in data["params"]),
            example_binding=data.get("example_binding"),
            optional_path_suffix=data.get("optional_path_suffix"),
            frozen_params=dict(data.get("frozen_params") or {}),
            provenance=data["provenance"],
            source=(data["source"][0], data["source"][1]),
            harness_digest=data["harness_digest"],
            status=data.get("status", STATUS_UNVALIDATED),
            tls_verify=data.get("tls_verify", True),
        )


@dataclass(frozen=True)
class Fingerprint:
    use_case: str
    inputs: tuple[tuple[str, str, Any], ...]  # (name, semantic type, example)
    output: str
    parent: str  # source_id


def slugify(name: str) -> str:
    slug = re.sub(r"[^0-9a-zA-Z]+", "_", name.strip()).strip("_").lower()
    if not slug:
        slug = "tool"
    if slug[0].isdigit():
        slug = "p_" + slug
    return slug


# --- URL normalization ------------------------------------------------------


def normalize_url_template(url: str) -> NormalizedUrl:
    """Rewrite ``:x``, ``{x}``, ``<x>`` placeholder forms to ``{x}``; expand
    ``[.{fmt}]`` optional suffixes; strip literal ``?k=v`` tails into query
    seeds. Idempotent."""
    if not url:
        raise MalformedUrl("empty URL")
    _check_braces(url)

    optional_params: list[str] = []
    for match in _OPTIONAL_SUFFIX_RE.finditer(url):
        optional_params.append(match.group(1))
    url = _OPTIONAL_SUFFIX_RE.sub("", url)

    seeds: list[tuple[str, str]] = []
    if "?" in url:
        url, _, tail = url.partition("?")
        seen: set[str] = set()
        for piece in tail.split("&"):
            if not piece:
                continue
            key, _, value = piece.partition("=")
            if key and key not in seen:
                seen.add(key)
                seeds.append((key, value))

    url = _ANGLE_PARAM_RE.sub(r"{\1}", url)
    url = _COLON_PARAM_RE.sub(r"{\1}", url)

    path_params = tuple(dict.fromkeys(_PLACEHOLDER_RE.findall(url)))
    return NormalizedUrl(
        template=url,
        path_params=path_params,
        optional_path_params=tuple(optional_params),
        query_seeds=tuple(seeds),
    )


def _check_braces(url: str) -> None:
    depth = 0
    for ch in url:
        if ch == "{":
            depth += 1
            if depth > 1:
                raise MalformedUrl(f"nested braces in {url!r}")
        elif ch == "}":
            depth -= 1
            if depth < 0:
                raise MalformedUrl(f"unbalanced braces in {url!r}")
    if depth != 0:
        raise MalformedUrl(f"unbalanced braces in {url!r}")


def substitute(template: str, values: dict[str, str]) -> str:
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)


# --- compilation ------------------------------------------------------------


def compile_direct(
    endpoint: EndpointSpec,
    doc: ApiDocument,
    allow_relative: bool = False,
) -> ToolSpec:
    """Wrap one endpoint as a direct tool.

    ``allow_relative`` keeps endpoints with unresolvable base URLs compilable
    so the validator can label them MissingBaseURL instead of losing them.
    """
    from .toolsource import HARNESS_DIGEST

    url = endpoint.url[0]
    if not url.startswith(("http://", "https://")):
        if doc.base_url:
            url = doc.base_url.rstrip("/") + "/" + url.lstrip("/")
        elif not allow_relative:
            raise MissingBaseUrl(f"{doc.source_id}/{endpoint.name}: {url!r}")

    normalized = normalize_url_template(url)
    declared: dict[str, tuple[ParameterSpec, bool]] = {}
    for spec in endpoint.required_parameters:
        declared[spec.name] = (spec, True)
    for spec in endpoint.optional_parameters:
        declared.setdefault(spec.name, (spec, False))

    params: list[ToolParam] = []
    path_names = set(normalized.path_params) | set(normalized.optional_path_params)
    for name in normalized.path_params:
        spec, _ = declared.pop(name, (ParameterSpec(name=name), True))
        params.append(ToolParam(spec=spec, required=True, location="path"))

    suffix = normalized.optional_path_params[0] if normalized.optional_path_params else None
    if suffix is not None:
        spec, _ = declared.pop(suffix, (ParameterSpec(name=suffix), False))
        params.append(ToolParam(spec=spec, required=False, location="path"))

    for name, (spec, required) in declared.items():
        if name in path_names:
            # Path wins on duplicate names; query duplicate renamed with a note.
            renamed = f"{name}_query"
            note = f"(query twin of path parameter {name})"
            spec = replace(
                spec,
                name=renamed,
                description=f"{spec.description or ''} {note}".strip(),
            )
        params.append(ToolParam(spec=spec, required=required, location="query"))

    for key, value in normalized.query_seeds:
        if not any(p.spec.name == key for p in params):
            params.append(
                ToolParam(
                    spec=ParameterSpec(name=key, default=value or None),
                    required=False,
                    location="query",
                )
            )

    for header in endpoint.headers:
        if isinstance(header, dict) and header.get("name"):
            params.append(
                ToolParam(
                    spec=ParameterSpec(
                        name=header["name"], default=header.get("value"), example=header.get("value")
                    ),
                    required=False,
                    location="header",
                )
            )

    binding = _example_binding(params)
    name = slugify(endpoint.name)
    return ToolSpec(
        tool_id=f"{doc.source_id}.{name}",
        name=name,
        description=endpoint.description or endpoint.name,
        method=endpoint.method,
        url_template=normalized.template,
        path_params=normalized.path_params,
        params=tuple(params),
        example_binding=binding,
        optional_path_suffix=suffix,
        provenance="direct",
        source=(doc.source_id, endpoint.name),
        harness_digest=HARNESS_DIGEST,
    )


def _example_binding(params: list[ToolParam]) -> dict[str, Any] | None:
    """Example binding covering every required parameter, or None when some
    required example is missing."""
    binding: dict[str, Any] = {}
    for param in params:
        example = param.spec.example
        if example is None and not param.required:
            example = param.spec.default
        if example is not None:
            binding[param.spec.name] = example
        elif param.required:
            return None
    return binding


def generate_fingerprints(doc: ApiDocument, gateway: OracleGateway) -> list[Fingerprint]:
    """Ask the oracle for up to 10 use-case fingerprints for a complex doc."""
    response = gateway.complete(
        OracleRequest(
            task_kind="fingerprint",
            prompt=prompts.fingerprint_prompt(doc.to_json()),
            response_schema={"type": "array"},
        )
    )
    known = {
        spec.name
        for endpoint in doc.endpoints
        for spec in endpoint.required_parameters + endpoint.optional_parameters
    }
    fingerprints: list[Fingerprint] = []
    for item in response:
        inputs = tuple(
            (i["name"], i.get("semantic_type", ""), i.get("example"))
            for i in item.get("inputs", [])
        )
        if any(name not in known for name, _, _ in inputs):
            continue
        fingerprints.append(
            Fingerprint(
                use_case=item["use_case"],
                inputs=inputs,
                output=item.get("output", ""),
                parent=doc.source_id,
            )
        )
        if len(fingerprints) == MAX_FINGERPRINTS:
            break
    return fingerprints


def compile_targeted(fp: Fingerprint, doc: ApiDocument) -> ToolSpec:
    """Compile a fingerprint into a tool exposing only the fingerprint's
    inputs; the endpoint's other parameters are frozen to their defaults."""
    endpoint = _endpoint_for(fp, doc)
    base = compile_direct(endpoint, doc)
    exposed = {name for name, _, _ in fp.inputs}
    unknown = exposed - {p.spec.name for p in base.params}
    if unknown:
        raise ValueError(f"fingerprint references unknown parameters: {sorted(unknown)}")

    examples = {name: example for name, _, example in fp.inputs if example is not None}
    frozen: dict[str, Any] = {}
    kept: list[ToolParam] = []
    for param in base.params:
        pname = param.spec.name
        if pname in exposed:
            kept.append(replace(param, required=True))
        else:
            value = param.spec.default if param.spec.default is not None else param.spec.example
            if value is not None:
                frozen[pname] = value

    path_values = {name: str(frozen[name]) for name in base.path_params if name in frozen}
    template = substitute_partial(base.url_template, path_values)
    path_params = tuple(n for n in base.path_params if n not in frozen)

    binding: dict[str, Any] | None = dict(examples)
    for param in kept:
        if param.spec.name not in binding:
            if param.spec.example is not None:
                binding[param.spec.name] = param.spec.example
            else:
                binding = None
                break

    name = slugify(fp.use_case)
    suffix = base.optional_path_suffix
    if suffix in frozen or (suffix is not None and suffix not in exposed):
        suffix = None
    return replace(
        base,
        tool_id=f"{doc.source_id}.{name}",
        name=name,
        description=f"{fp.use_case} Returns: {fp.output}".strip(),
        url_template=template,
        path_params=path_params,
        params=tuple(kept),
        example_binding=binding,
        optional_path_suffix=suffix,
        frozen_params=frozen,
        provenance="targeted",
    )


def substitute_partial(template: str, values: dict[str, str]) -> str:
    return _PLACEHOLDER_RE.sub(
        lambda m: values.get(m.group(1), m.group(0)), template
    )


def _endpoint_for(fp: Fingerprint, doc: ApiDocument) -> EndpointSpec:
    wanted = {name for name, _, _ in fp.inputs}
    for endpoint in doc.endpoints:
        names = {
            s.name for s in endpoint.required_parameters + endpoint.optional_parameters
        }
        if wanted <= names:
            return endpoint
    raise ValueError(
        f"no endpoint in {doc.source_id} covers fingerprint inputs {sorted(wanted)}"
    )


def enforce_method_policy(
    tool: ToolSpec, allow: frozenset[str] | set[str] = DEFAULT_ALLOW_METHODS
) -> ToolSpec:
    if tool.method not in allow:
        raise MethodDisallowed(f"{tool.tool_id}: method {tool.method} not in {sorted(allow)}")
    return tool


def dedupe_names(tools: list[ToolSpec]) -> list[ToolSpec]:
    """Stable numeric-suffix deduplication of tool names within a set."""
    seen: dict[str, int] = {}
    out: list[ToolSpec] = []
    for tool in tools:
        count = seen.get(tool.name, 0)
        seen[tool.name] = count + 1
        if count:
            new_name = f"{tool.name}_{count + 1}"
            tool = replace(tool, name=new_name, tool_id=f"{tool.source_id}.{new_name}")
        out.append(tool)
    return out


def write_tool(tool: ToolSpec, out_dir: str | Path) -> Path:
    path = Path(out_dir) / f"{tool.tool_id}.tool.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(tool.to_json(), indent=2), encoding="utf-8")
    return path


def read_tool(path: str | Path) -> ToolSpec:
    return ToolSpec.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

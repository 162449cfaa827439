"""Load raw documentation, filter and classify it, and extract structured
API descriptions through the oracle gateway."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser
from pathlib import Path
from typing import Any
from urllib.parse import urlsplit, urlunsplit

import jsonschema
import requests

from . import prompts
from .errors import (
    IoFailure,
    OracleError,
    SchemaViolation,
    UnparseableLabel,
    UnsupportedMedia,
)
from .oracles import OracleGateway, OracleRequest

HTTP_METHODS = ("GET", "POST", "PUT", "PATCH", "DELETE", "HEAD", "OPTIONS")

QUALITY_FULLY = "FullyOrganized"
QUALITY_SEMI = "SemiOrganized"
QUALITY_UNORGANIZED = "Unorganized"
QUALITY_LABELS = (QUALITY_FULLY, QUALITY_SEMI, QUALITY_UNORGANIZED)

_CATEGORY_MAP = {
    "Fully Organized": QUALITY_FULLY,
    "Semi-Organized": QUALITY_SEMI,
    "Unorganized": QUALITY_UNORGANIZED,
}

_MEDIA_BY_EXT = {
    ".html": "html",
    ".htm": "html",
    ".md": "markdown",
    ".markdown": "markdown",
}


@dataclass(frozen=True)
class RawDocument:
    source_id: str
    origin: str
    media: str  # "html" | "markdown"
    body: str
    fetched_at: float


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    type: str | None = None
    description: str | None = None
    default: Any = None
    example: Any = None

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "type": self.type,
            "description": self.description,
            "default": self.default,
            "example": self.example,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ParameterSpec":
        return cls(
            name=data["name"],
            type=data.get("type"),
            description=data.get("description"),
            default=data.get("default"),
            example=data.get("example"),
        )


@dataclass(frozen=True)
class EndpointSpec:
    name: str
    method: str
    url: tuple[str, ...]
    description: str | None = None
    headers: tuple[Any, ...] = ()
    required_parameters: tuple[ParameterSpec, ...] = ()
    optional_parameters: tuple[ParameterSpec, ...] = ()

    def __post_init__(self) -> None:
        if self.method not in HTTP_METHODS:
            raise ValueError(f"unsupported method: {self.method!r}")

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "method": self.method,
            "url": list(self.url),
            "headers": list(self.headers),
            "required_parameters": [p.to_json() for p in self.required_parameters],
            "optional_parameters": [p.to_json() for p in self.optional_parameters],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "EndpointSpec":
        urls = data["url"]
        if isinstance(urls, str):
            urls = [urls]
        return cls(
            name=data["name"],
            description=data.get("description"),
            method=data["method"].upper(),
            url=tuple(urls),
            headers=tuple(data.get("headers") or ()),
            required_parameters=tuple(
                ParameterSpec.from_json(p) for p in data.get("required_parameters") or ()
            ),
            optional_parameters=tuple(
                ParameterSpec.from_json(p) for p in data.get("optional_parameters") or ()
            ),
        )


@dataclass(frozen=True)
class ApiDocument:
    source_id: str
    endpoints: tuple[EndpointSpec, ...]
    title: str | None = None
    base_url: str | None = None
    quality: str | None = None
    quality_analysis: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "endpoints": [e.to_json() for e in self.endpoints],
            "source_id": self.source_id,
            "base_url": self.base_url,
            "quality": self.quality,
            "quality_analysis": self.quality_analysis,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ApiDocument":
        return cls(
            source_id=data["source_id"],
            endpoints=tuple(EndpointSpec.from_json(e) for e in data["endpoints"]),
            title=data.get("title"),
            base_url=data.get("base_url"),
            quality=data.get("quality"),
            quality_analysis=data.get("quality_analysis"),
        )


# --- extraction schema ------------------------------------------------------

_PARAMETER_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "type": {"type": ["string", "null"]},
        "description": {"type": ["string", "null"]},
        "default": {},
        "example": {},
    },
    "required": ["name"],
    "additionalProperties": False,
}

EXTRACTION_SCHEMA = {
    "type": "object",
    "properties": {
        "title": {"type": ["string", "null"]},
        "endpoints": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "description": {"type": ["string", "null"]},
                    "method": {"enum": list(HTTP_METHODS)},
                    "url": {
                        "anyOf": [
                            {"type": "string"},
                            {"type": "array", "items": {"type": "string"}, "minItems": 1},
                        ]
                    },
                    "headers": {"type": ["array", "null"]},
                    "required_parameters": {
                        "type": ["array", "null"],
                        "items": _PARAMETER_SCHEMA,
                    },
                    "optional_parameters": {
                        "type": ["array", "null"],
                        "items": _PARAMETER_SCHEMA,
                    },
                },
                "required": ["name", "method", "url"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["endpoints"],
    "additionalProperties": False,
}


# --- HTML handling ----------------------------------------------------------


class _TextExtractor(HTMLParser):
    """Strips tags, drops script/style, keeps table rows pipe-delimited."""

    _SKIP = {"script", "style"}
    _BREAKS = {"p", "div", "br", "li", "h1", "h2", "h3", "h4", "h5", "h6", "pre"}

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip_depth = 0
        self._in_row = False

    def handle_starttag(self, tag: str, attrs: Any) -> None:
        if tag in self._SKIP:
            self._skip_depth += 1
        elif tag == "tr":
            self._in_row = True
            self.parts.append("\n| ")
        elif tag in ("td", "th"):
            pass
        elif tag in self._BREAKS:
            self.parts.append("\n")

    def handle_endtag(self, tag: str) -> None:
        if tag in self._SKIP and self._skip_depth:
            self._skip_depth -= 1
        elif tag == "tr":
            self._in_row = False
            self.parts.append(" |")
        elif tag in ("td", "th") and self._in_row:
            self.parts.append(" | ")
        elif tag in self._BREAKS:
            self.parts.append("\n")

    def handle_data(self, data: str) -> None:
        if not self._skip_depth and data.strip():
            self.parts.append(data.strip() + " ")


def html_to_text(html: str) -> str:
    extractor = _TextExtractor()
    extractor.feed(html)
    text = "".join(extractor.parts)
    lines = [line.strip() for line in text.splitlines()]
    return "\n".join(line for line in lines if line)


def visible_text(doc: RawDocument) -> str:
    return html_to_text(doc.body) if doc.media == "html" else doc.body


# --- operations -------------------------------------------------------------


def load_document(origin: str, source_id: str | None = None) -> RawDocument:
    """Read a documentation page from a file path or URL."""
    if origin.startswith(("http://", "https://")):
        try:
            resp = requests.get(origin, timeout=50)
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise IoFailure(f"cannot fetch {origin}: {exc}") from exc
        body = resp.content.decode("utf-8", errors="replace")
        content_type = resp.headers.get("Content-Type", "")
        suffix = Path(urlsplit(origin).path).suffix.lower()
        media = _MEDIA_BY_EXT.get(suffix) or ("html" if "html" in content_type else None)
        default_id = Path(urlsplit(origin).path).stem or urlsplit(origin).netloc
    else:
        path = Path(origin)
        if not path.exists():
            raise IoFailure(f"no such file: {origin}")
        body = path.read_bytes().decode("utf-8", errors="replace")
        media = _MEDIA_BY_EXT.get(path.suffix.lower())
        default_id = path.stem
    if not body.strip():
        raise IoFailure(f"empty body: {origin}")
    if media is None:
        media = _sniff_media(body)
    if media is None:
        raise UnsupportedMedia(f"not HTML or Markdown: {origin}")
    return RawDocument(
        source_id=source_id or default_id,
        origin=origin,
        media=media,
        body=body,
        fetched_at=time.time(),
    )


def _sniff_media(body: str) -> str | None:
    head = body[:512].lower()
    if "<html" in head or "<!doctype html" in head or "<body" in head:
        return "html"
    return None


def has_api_content(doc: RawDocument, gateway: OracleGateway) -> bool:
    """True iff the page statically describes API endpoints."""
    text = visible_text(doc)
    if not text.strip():
        return False
    answer = gateway.complete(
        OracleRequest(task_kind="doc_quality", prompt=prompts.content_filter_prompt(text))
    )
    return str(answer).strip().lower().startswith("yes")


def classify_doc_quality(doc: RawDocument, gateway: OracleGateway) -> tuple[str, str]:
    """Classify into the three quality labels; returns (label, analysis)."""
    response = gateway.complete(
        OracleRequest(
            task_kind="doc_quality",
            prompt=prompts.doc_quality_prompt(visible_text(doc)),
            response_schema={
                "type": "object",
                "properties": {
                    "analysis": {"type": "string"},
                    "category": {"enum": list(_CATEGORY_MAP)},
                },
                "required": ["analysis", "category"],
            },
        )
    )
    if not isinstance(response, dict) or response.get("category") not in _CATEGORY_MAP:
        raise UnparseableLabel(f"unexpected quality response: {response!r}")
    return _CATEGORY_MAP[response["category"]], str(response.get("analysis", ""))[:300]


def extract_api_json(doc: RawDocument, gateway: OracleGateway) -> ApiDocument:
    """Extract the structured API description for one document.

    The oracle output is validated locally against the extraction schema;
    one re-ask with the violation appended is attempted before raising.
    """
    base_prompt = prompts.extract_prompt(visible_text(doc))
    raw = _complete_extract(gateway, base_prompt)
    error = _schema_error(raw)
    if error is not None:
        retry_prompt = base_prompt + f"\n\nYour previous output violated the schema: {error}\nReturn corrected JSON only.\n"
        try:
            raw = _complete_extract(gateway, retry_prompt)
        except OracleError as exc:
            # Re-ask unavailable (e.g. scripted run): report the original issue.
            raise SchemaViolation(error) from exc
        error = _schema_error(raw)
        if error is not None:
            raise SchemaViolation(error)

    endpoints = tuple(EndpointSpec.from_json(e) for e in raw["endpoints"])
    base_url = _recover_base_url(endpoints, doc.origin)
    if base_url is not None:
        endpoints = tuple(_resolve_endpoint(e, base_url) for e in endpoints)
    return ApiDocument(
        source_id=doc.source_id,
        endpoints=endpoints,
        title=raw.get("title"),
        base_url=base_url,
    )


def _complete_extract(gateway: OracleGateway, prompt: str) -> Any:
    raw = gateway.complete(
        OracleRequest(task_kind="extract", prompt=prompt, response_schema=EXTRACTION_SCHEMA)
    )
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except ValueError:
            pass
    return raw


def _schema_error(raw: Any) -> str | None:
    try:
        jsonschema.validate(raw, EXTRACTION_SCHEMA)
    except jsonschema.ValidationError as exc:
        return exc.message
    return None


def _recover_base_url(endpoints: tuple[EndpointSpec, ...], origin: str) -> str | None:
    """Derive an absolute base URL from the endpoints or the document origin."""
    for endpoint in endpoints:
        for url in endpoint.url:
            if url.startswith(("http://", "https://")):
                parts = urlsplit(url)
                return urlunsplit((parts.scheme, parts.netloc, "", "", ""))
    if origin.startswith(("http://", "https://")):
        parts = urlsplit(origin)
        return urlunsplit((parts.scheme, parts.netloc, "", "", ""))
    return None


def _resolve_endpoint(endpoint: EndpointSpec, base_url: str) -> EndpointSpec:
    resolved = tuple(
        url if url.startswith(("http://", "https://")) else base_url.rstrip("/") + "/" + url.lstrip("/")
        for url in endpoint.url
    )
    if resolved == endpoint.url:
        return endpoint
    return replace(endpoint, url=resolved)


def write_api_document(doc: ApiDocument, out_dir: str | Path) -> Path:
    path = Path(out_dir) / f"{doc.source_id}.api.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc.to_json(), indent=2), encoding="utf-8")
    return path


def read_api_document(path: str | Path) -> ApiDocument:
    return ApiDocument.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

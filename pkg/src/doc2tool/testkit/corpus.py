"""Fixture corpus: twelve documentation pages of varying quality, the mock
routes that make their examples live, and the scripted oracle outputs keyed to
each page's prompts.

Doc templates carry a ``{{MOCK}}`` placeholder for the mock server address,
rendered at build time so prompt digests line up with the written files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .. import prompts
from ..oracles import OracleRequest, ScriptedCompletionBackend
from .mockserver import MockRoute

FIXTURES_ROOT = Path(__file__).parent / "fixtures"

MOCK_PLACEHOLDER = "{{MOCK}}"

DEGRADATIONS = (
    "noBaseUrl",
    "noExamples",
    "wrongExample",
    "unlabeledParams",
    "colonPathParams",
    "angleBracketParams",
)

_CATEGORY_BY_LABEL = {
    "FullyOrganized": "Fully Organized",
    "SemiOrganized": "Semi-Organized",
    "Unorganized": "Unorganized",
}


@dataclass(frozen=True)
class CorpusDoc:
    doc_id: str
    quality: str
    degradations: tuple[str, ...]
    path: Path
    text: str

    def __post_init__(self) -> None:
        if self.quality == "FullyOrganized" and self.degradations:
            raise ValueError(f"{self.doc_id}: fully organized docs carry no degradations")
        unknown = set(self.degradations) - set(DEGRADATIONS)
        if unknown:
            raise ValueError(f"{self.doc_id}: unknown degradations {sorted(unknown)}")


@dataclass(frozen=True)
class CorpusBuild:
    docs: tuple[CorpusDoc, ...]
    extra: tuple[CorpusDoc, ...]
    docs_dir: Path
    extra_docs_dir: Path
    oracle_dir: Path
    mock_base_url: str

    def doc(self, doc_id: str) -> CorpusDoc:
        for entry in self.docs + self.extra:
            if entry.doc_id == doc_id:
                return entry
        raise KeyError(doc_id)


def corpus_routes() -> list[MockRoute]:
    """Mock routes backing the corpus docs' documented endpoints."""
    return [
        MockRoute(
            path="/charts/render",
            expect_query={"chs": "", "cht": "", "chd": ""},
            body={"chart_id": "c-001", "format": "png", "width": 400, "height": 300},
        ),
        MockRoute(
            path="/shop/items/{item_id}",
            expect_path={"item_id": "SKU-1001"},
            body={
                "item_id": "SKU-1001",
                "name": "Compact wireless mouse",
                "price": 24.9,
                "currency": "EUR",
                "stock": 140,
            },
        ),
        MockRoute(
            path="/osrm/{profile}/{service}/v1/test/{coordinates}",
            expect_path={"profile": "driving", "service": "route"},
            body={"code": "Ok", "routes": [{"distance": 1886.8, "duration": 251.5}]},
        ),
        MockRoute(
            path="/shop/reviews/{item_id}",
            expect_path={"item_id": "SKU-1001"},
            body={
                "item_id": "SKU-1001",
                "reviews": [{"rating": 5, "comment": "Great value"}],
            },
        ),
        MockRoute(
            path="/glyco/structure/{glytoucan_id}",
            expect_path={"glytoucan_id": "G00048MO"},
            body={"id": "G00048MO", "name": "Lewis b", "monoisotopic_mass": 1128.41},
        ),
        MockRoute(
            path="/glyco/pathway",
            expect_query={"glycan_id": "G00048MO"},
            body={
                "glycan_id": "G00048MO",
                "pathways": [{"id": "map00601", "name": "Glycosphingolipid biosynthesis"}],
            },
        ),
        MockRoute(
            path="/transit/departures/{station_id}",
            expect_path={"station_id": "CENTRAL"},
            body={
                "station_id": "CENTRAL",
                "departures": [
                    {"line": "M1", "in_minutes": 4},
                    {"line": "M3", "in_minutes": 9},
                ],
            },
        ),
        MockRoute(
            path="/metrics/series/{metric}",
            expect_path={"metric": "cpu"},
            body={"metric": "cpu", "points": [[0, 0.42], [60, 0.57]]},
        ),
        MockRoute(
            path="/weather/current",
            expect_query={"city_id": "AMS-01"},
            body={"city_id": "AMS-01", "temp_c": 18.2, "conditions": "cloudy"},
        ),
        MockRoute(
            path="/cities/{city_id}",
            expect_path={"city_id": "AMS-01"},
            body={"city_id": "AMS-01", "name": "Amsterdam", "country": "NL"},
        ),
        MockRoute(
            path="/shop/inventory",
            expect_query={"item_id": "SKU-1001"},
            body={"item_id": "SKU-1001", "warehouse": "EU-CENTRAL-1", "on_hand": 140},
        ),
        MockRoute(path="/ping", body={"pong": True}),
    ]


def _manifest() -> dict:
    return json.loads((FIXTURES_ROOT / "manifest.json").read_text(encoding="utf-8"))


def _extractions() -> dict:
    return json.loads((FIXTURES_ROOT / "extractions.json").read_text(encoding="utf-8"))


def corpus_doc_ids() -> list[str]:
    return [entry["doc_id"] for entry in _manifest()["corpus"]]


def _render(template: str, mock_base_url: str) -> str:
    return template.replace(MOCK_PLACEHOLDER, mock_base_url.rstrip("/"))


def _render_json(value, mock_base_url: str):
    if isinstance(value, str):
        return _render(value, mock_base_url)
    if isinstance(value, list):
        return [_render_json(v, mock_base_url) for v in value]
    if isinstance(value, dict):
        return {k: _render_json(v, mock_base_url) for k, v in value.items()}
    return value


def build_corpus(
    mock_base_url: str, out_dir: str | Path, include_extra: bool = True
) -> CorpusBuild:
    """Render doc files and author the scripted oracle fixtures they key to.

    Per doc this stores three fixtures: the content-filter answer, the quality
    classification, and the structured extraction output.
    """
    out = Path(out_dir)
    docs_dir = out / "docs"
    # Extra docs (e.g. the routing example pointing at a non-served host)
    # live apart so they are not swept into a directory-driven pipeline run.
    extra_docs_dir = out / "extra_docs"
    oracle_dir = out / "oracle_fixtures"
    docs_dir.mkdir(parents=True, exist_ok=True)
    extra_docs_dir.mkdir(parents=True, exist_ok=True)
    oracle_dir.mkdir(parents=True, exist_ok=True)

    manifest = _manifest()
    extractions = _extractions()
    backend = ScriptedCompletionBackend(oracle_dir)

    def build_one(entry: dict, target_dir: Path = docs_dir) -> CorpusDoc:
        doc_id = entry["doc_id"]
        template = (FIXTURES_ROOT / "docs" / f"{doc_id}.md").read_text(encoding="utf-8")
        text = _render(template, mock_base_url)
        path = target_dir / f"{doc_id}.md"
        path.write_text(text, encoding="utf-8")

        backend.store(
            OracleRequest(task_kind="doc_quality", prompt=prompts.content_filter_prompt(text)),
            "yes",
        )
        backend.store(
            OracleRequest(task_kind="doc_quality", prompt=prompts.doc_quality_prompt(text)),
            {
                "analysis": entry["analysis"],
                "category": _CATEGORY_BY_LABEL[entry["quality"]],
            },
        )
        backend.store(
            OracleRequest(task_kind="extract", prompt=prompts.extract_prompt(text)),
            _render_json(extractions[doc_id], mock_base_url),
        )
        return CorpusDoc(
            doc_id=doc_id,
            quality=entry["quality"],
            degradations=tuple(entry["degradations"]),
            path=path,
            text=text,
        )

    docs = tuple(build_one(entry) for entry in manifest["corpus"])
    extra = (
        tuple(build_one(entry, extra_docs_dir) for entry in manifest["extra"])
        if include_extra
        else ()
    )
    return CorpusBuild(
        docs=docs,
        extra=extra,
        docs_dir=docs_dir,
        extra_docs_dir=extra_docs_dir,
        oracle_dir=oracle_dir,
        mock_base_url=mock_base_url,
    )

"""Offline test substrate: a configurable mock API server and a fixture
corpus of documentation pages with matching scripted oracle outputs."""

from .mockserver import MockRoute, MockServer, start_mock
from .corpus import CorpusDoc, build_corpus, corpus_routes

__all__ = [
    "MockRoute",
    "MockServer",
    "start_mock",
    "CorpusDoc",
    "build_corpus",
    "corpus_routes",
]

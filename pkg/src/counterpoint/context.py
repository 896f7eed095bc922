"""Search-grounded context summaries and the highlight-selection explainer.

"Get additional context" sends the article title to a search provider and
summarizes the ranked snippets neutrally; with no results the summary falls
back to the article body and is flagged article-only. Selecting text in the
reader yields a definition for single words and broader context otherwise.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol

from .core import Document, Span, check_span
from .gateway import Gateway, TemplateId
from .matching import normalize_tokens

DEFAULT_SNIPPET_COUNT = 5
SELECTION_CONTEXT_CODEPOINTS = 200


class SearchUnavailable(RuntimeError):
    """The search provider failed or timed out."""


@dataclass(frozen=True)
class SearchSnippet:
    title: str
    url: str
    snippet: str
    rank: int


@dataclass(frozen=True)
class ContextSummary:
    query_title: str
    snippets: tuple[SearchSnippet, ...]
    summary_text: str
    generated_at: float
    article_only: bool = False


class ExplanationMode(Enum):
    DEFINITION = "definition"
    CONTEXT = "context"


@dataclass(frozen=True)
class SelectionExplanation:
    selected_text: str
    span: Span
    mode: ExplanationMode
    explanation: str


class SearchProvider(Protocol):
    def search(self, query: str) -> list[SearchSnippet]: ...


class MockSearchProvider:
    """Serves snippet fixtures from JSON files keyed by query digest.

    A query without a fixture returns no snippets, which downstream code
    treats as the article-only fallback.
    """

    def __init__(self, fixtures_dir: str | Path | None = None) -> None:
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None

    @staticmethod
    def fixture_name(query: str) -> str:
        return "search__" + hashlib.sha256(query.encode("utf-8")).hexdigest()[:16] + ".json"

    def search(self, query: str) -> list[SearchSnippet]:
        if self.fixtures_dir is None:
            return []
        path = self.fixtures_dir / self.fixture_name(query)
        if not path.exists():
            return []
        entries = json.loads(path.read_text(encoding="utf-8"))
        return [
            SearchSnippet(
                title=entry["title"],
                url=entry["url"],
                snippet=entry["snippet"],
                rank=i + 1,
            )
            for i, entry in enumerate(entries)
        ]


class HttpSearchProvider:
    """Minimal JSON search API client configured via SEARCH_* variables."""

    def __init__(self, base_url: str, api_key: str = "", timeout_s: float = 30.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout_s = timeout_s

    def search(self, query: str) -> list[SearchSnippet]:
        import httpx

        try:
            response = httpx.get(
                f"{self.base_url}/search",
                params={"q": query, "api_key": self.api_key},
                timeout=self.timeout_s,
            )
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise SearchUnavailable(str(exc)) from exc
        results = response.json().get("results", [])
        usable = [item for item in results if item.get("snippet")]
        return [
            SearchSnippet(
                title=item.get("title", ""),
                url=item.get("url", ""),
                snippet=item["snippet"],
                rank=i + 1,
            )
            for i, item in enumerate(usable)
        ]


def search_provider_from_env(env: dict[str, str] | None = None) -> SearchProvider:
    env = env if env is not None else dict(os.environ)
    base_url = env.get("SEARCH_BASE_URL")
    if base_url:
        return HttpSearchProvider(base_url, api_key=env.get("SEARCH_API_KEY", ""))
    return MockSearchProvider(fixtures_dir=env.get("SEARCH_FIXTURES_DIR"))


def fetch_context(
    title: str, provider: SearchProvider, limit: int = DEFAULT_SNIPPET_COUNT
) -> list[SearchSnippet]:
    """Top ``limit`` snippets for the article title, re-ranked 1..k."""
    if not title or not title.strip():
        raise ValueError("title must be non-empty")
    snippets = provider.search(title)[:limit]
    return [
        SearchSnippet(title=s.title, url=s.url, snippet=s.snippet, rank=i + 1)
        for i, s in enumerate(snippets)
    ]


def summarize_context(
    doc: Document,
    snippets: list[SearchSnippet],
    gateway: Gateway,
    clock=time.time,
) -> ContextSummary:
    """Neutral summary of the issue behind the article title."""
    if snippets:
        sources = "\n".join(
            f"{s.rank}. {s.title}: {s.snippet}" for s in snippets
        )
        article_only = False
    else:
        sources = f"(no search results; article text follows)\n{doc.body}"
        article_only = True
    result = gateway.complete_template(
        TemplateId.CONTEXT_SUMMARIZE,
        {"title": doc.title, "sources": sources},
        fixture_key=doc.doc_id,
    )
    return ContextSummary(
        query_title=doc.title,
        snippets=tuple(snippets),
        summary_text=result.text,
        generated_at=clock(),
        article_only=article_only,
    )


def selection_mode(selected_text: str) -> ExplanationMode:
    """Definition iff the selection is a single token after trimming
    punctuation; anything longer gets contextual explanation."""
    tokens = normalize_tokens(selected_text)
    if len(tokens) == 1:
        return ExplanationMode.DEFINITION
    return ExplanationMode.CONTEXT


def explain_selection(doc: Document, span: Span, gateway: Gateway) -> SelectionExplanation:
    """Explain a selected region with its surrounding passage for context."""
    check_span(doc, span)
    selected = doc.body[span.start : span.end]
    window_start = max(0, span.start - SELECTION_CONTEXT_CODEPOINTS)
    window_end = min(len(doc.body), span.end + SELECTION_CONTEXT_CODEPOINTS)
    result = gateway.complete_template(
        TemplateId.SELECTION_EXPLAIN,
        {
            "selection": selected,
            "passage": doc.body[window_start:window_end],
        },
        fixture_key=f"{doc.doc_id}__s{span.start}_{span.end}",
    )
    return SelectionExplanation(
        selected_text=selected,
        span=span,
        mode=selection_mode(selected),
        explanation=result.text,
    )

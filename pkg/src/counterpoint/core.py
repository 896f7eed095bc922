"""Canonical document model and offset conventions.

Everything downstream (claim spans, highlights, retrieval chunks, selection
explanations) references a document body by half-open [start, end) ranges of
Unicode code points. Python strings index code points natively, so slicing is
the authoritative span semantics; boundary adapters (e.g. the web UI) convert
to whatever indexing the client needs.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from enum import Enum


class Lean(Enum):
    """Political orientation tag for an article."""

    LEFT = "left"
    RIGHT = "right"
    NEUTRAL = "neutral"
    UNKNOWN = "unknown"


class Role(Enum):
    """Speaker in a conversation (Q&A or debate)."""

    USER = "user"
    BOT = "bot"


class EmptyDocument(ValueError):
    """Raised when ingesting an empty or whitespace-only article."""


class SpanOutOfRange(ValueError):
    """Raised when a span does not address a valid region of a document body."""


@dataclass(frozen=True)
class Span:
    """Half-open [start, end) code-point range into a document body."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise SpanOutOfRange(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Document:
    """Immutable article text. Safe to share across threads after ingestion."""

    doc_id: str
    title: str
    body: str
    lean: Lean = Lean.UNKNOWN
    source_url: str | None = None


@dataclass(frozen=True)
class StanceRating:
    """Reader stance on a topic, 1 (strongly disagree) to 5 (strongly agree)."""

    topic: str
    value: int

    def __post_init__(self) -> None:
        if not 1 <= self.value <= 5:
            raise ValueError(f"stance value must be in 1..5, got {self.value}")


# Control characters other than \n and \t (tab is rewritten to a space below
# so adjacent words never fuse).
_CONTROL_RE = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f-]")


def normalize_body(raw: str) -> str:
    """Minimal ingestion normalization: newline convention + control chars.

    Applying it twice is a no-op, which keeps re-ingestion a fixed point.
    All matching-time normalization (case, punctuation, quotes) lives in the
    annotate pipeline; the stored body must equal what the reader sees.
    """
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    text = text.replace("\t", " ")
    return _CONTROL_RE.sub("", text)


def compute_doc_id(body: str, title: str) -> str:
    """Deterministic document id from the normalized content digest."""
    digest = hashlib.sha256()
    digest.update(title.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(body.encode("utf-8"))
    return digest.hexdigest()[:16]


def ingest_document(
    raw: str,
    title: str,
    lean: Lean = Lean.UNKNOWN,
    source_url: str | None = None,
) -> Document:
    """Normalize raw article text and wrap it in an immutable Document.

    Raises EmptyDocument if the input is empty or whitespace-only.
    """
    if not raw or not raw.strip():
        raise EmptyDocument("article text is empty or whitespace-only")
    body = normalize_body(raw)
    if not body.strip():
        raise EmptyDocument("article text is empty after normalization")
    return Document(
        doc_id=compute_doc_id(body, title),
        title=title,
        body=body,
        lean=lean,
        source_url=source_url,
    )


def check_span(doc: Document, span: Span) -> None:
    """Validate that ``span`` addresses a region inside ``doc.body``."""
    if span.start < 0 or span.end > len(doc.body) or span.start >= span.end:
        raise SpanOutOfRange(
            f"span [{span.start}, {span.end}) out of range for body of "
            f"length {len(doc.body)}"
        )


def span_text(doc: Document, span: Span) -> str:
    """Return exactly the code points of ``doc.body`` in [start, end)."""
    check_span(doc, span)
    return doc.body[span.start : span.end]

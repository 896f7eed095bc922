"""Passive-support pipeline: claims, spans, overlap resolution, counters.

``annotate`` composes four stages: ask the provider for claim strings, align
each claim to a source span, drop overlapping spans so highlight regions stay
disjoint, and generate one counter-argument per retained claim in a single
batched call (falling back to per-claim calls when the batch response is
malformed).
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .core import Document, Span, span_text
from .gateway import Gateway, TemplateId
from .matching import (
    DEFAULT_FUZZY_THRESHOLD,
    MatchKind,
    NoMatch,
    align_claim,
    normalize_text,
)

SUMMARY_MAX_CODEPOINTS = 240


@dataclass(frozen=True)
class ClaimSpan:
    """A claim string aligned to a half-open span in the document."""

    claim_id: str
    claim_text: str
    span: Span
    match_kind: MatchKind
    match_score: float


@dataclass(frozen=True)
class CounterArgument:
    """Generated rebuttal for one claim: collapsed summary plus full text."""

    claim_id: str
    summary: str
    full_text: str
    provenance: str


@dataclass(frozen=True)
class PipelineMetadata:
    """What the pipeline dropped and why; unmatched claims are kept here."""

    extracted: int = 0
    retained: int = 0
    unmatched: tuple[str, ...] = ()
    overlapping: tuple[str, ...] = ()


@dataclass(frozen=True)
class AnnotatedDocument:
    document: Document
    claims: tuple[ClaimSpan, ...]
    counters: tuple[CounterArgument, ...]
    metadata: PipelineMetadata = field(default_factory=PipelineMetadata)


class CounterParseFailure(RuntimeError):
    """Both the batched and the per-claim counter calls were unparseable."""


_LIST_PREFIX_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")
_NUMBERED_ITEM_RE = re.compile(r"^\s*(\d+)[.)]\s+", re.MULTILINE)
_FIRST_SENTENCE_RE = re.compile(r".+?[.!?](?=\s|$)", re.DOTALL)


def parse_claim_lines(text: str) -> list[str]:
    """Split provider output into claim strings, stripping list markers."""
    claims = []
    for line in text.splitlines():
        stripped = _LIST_PREFIX_RE.sub("", line).strip()
        if stripped:
            claims.append(stripped)
    return claims


def extract_claims(doc: Document, gateway: Gateway) -> list[str]:
    """Provider claim strings in order of appearance, deduplicated.

    Duplicates are detected by normalized equality so a case-variant of an
    earlier claim is not extracted twice.
    """
    result = gateway.complete_template(
        TemplateId.CLAIM_EXTRACT,
        {"title": doc.title, "body": doc.body},
        fixture_key=doc.doc_id,
    )
    seen: set[str] = set()
    claims: list[str] = []
    for claim in parse_claim_lines(result.text):
        key = normalize_text(claim)
        if key and key not in seen:
            seen.add(key)
            claims.append(claim)
    return claims


def _claim_id(doc_id: str, claim_text: str, start: int) -> str:
    digest = hashlib.sha256(f"{doc_id}|{start}|{claim_text}".encode("utf-8"))
    return digest.hexdigest()[:12]


def match_span(
    doc: Document, claim: str, fuzzy_threshold: float = DEFAULT_FUZZY_THRESHOLD
) -> ClaimSpan:
    """Align one claim to the document; raises NoMatch when every tier fails."""
    region = align_claim(doc.body, claim, fuzzy_threshold)
    return ClaimSpan(
        claim_id=_claim_id(doc.doc_id, claim, region.span.start),
        claim_text=claim,
        span=region.span,
        match_kind=region.kind,
        match_score=region.score,
    )


def resolve_overlaps(spans: list[ClaimSpan]) -> list[ClaimSpan]:
    """Greedy retention: higher score, then earlier start, then longer span.

    Any span overlapping an already-retained one is dropped. The result is
    independent of input order (final tie-breaks are on claim text and id)
    and sorted ascending by start.
    """
    ordered = sorted(
        spans,
        key=lambda c: (
            -c.match_score,
            c.span.start,
            -(c.span.end - c.span.start),
            c.claim_text,
            c.claim_id,
        ),
    )
    retained: list[ClaimSpan] = []
    for candidate in ordered:
        if all(not candidate.span.overlaps(kept.span) for kept in retained):
            retained.append(candidate)
    return sorted(retained, key=lambda c: c.span.start)


def first_sentence_summary(text: str, limit: int = SUMMARY_MAX_CODEPOINTS) -> str:
    """Collapsed counter view: first sentence, capped at ``limit`` code points."""
    stripped = text.strip()
    match = _FIRST_SENTENCE_RE.match(stripped)
    summary = match.group(0) if match else stripped
    return summary[:limit]


def parse_numbered_items(text: str, expected: int) -> list[str] | None:
    """Parse a numbered list with entries 1..expected, in order.

    Returns None when the numbering is missing, incomplete, or misordered;
    callers then fall back to per-claim generation.
    """
    matches = list(_NUMBERED_ITEM_RE.finditer(text))
    if [int(m.group(1)) for m in matches] != list(range(1, expected + 1)):
        return None
    items = []
    for i, match in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        item = text[match.end() : end].strip()
        if not item:
            return None
        items.append(item)
    return items


def generate_counters(
    doc: Document, claims: list[ClaimSpan], gateway: Gateway
) -> list[CounterArgument]:
    """One counter-argument per claim, batched with per-claim fallback.

    The batched call carries the full claim list; if its response cannot be
    parsed into exactly one entry per claim, each claim is retried alone.
    """
    if not claims:
        return []
    numbered = "\n".join(
        f"{i}. {claim.claim_text}" for i, claim in enumerate(claims, start=1)
    )
    result = gateway.complete_template(
        TemplateId.COUNTER_GEN,
        {"claims": numbered},
        fixture_key=doc.doc_id,
    )
    provenance = f"{TemplateId.COUNTER_GEN.value}/{result.provider_id}"
    items = parse_numbered_items(result.text, expected=len(claims))
    if items is None:
        items = []
        for i, claim in enumerate(claims):
            single = gateway.complete_template(
                TemplateId.COUNTER_GEN,
                {"claims": f"1. {claim.claim_text}"},
                fixture_key=f"{doc.doc_id}__c{i}",
            )
            parsed = parse_numbered_items(single.text, expected=1)
            text = parsed[0] if parsed else single.text.strip()
            if not text:
                raise CounterParseFailure(
                    f"no counter-argument obtainable for claim {claim.claim_id}"
                )
            items.append(text)
    return [
        CounterArgument(
            claim_id=claim.claim_id,
            summary=first_sentence_summary(text),
            full_text=text,
            provenance=provenance,
        )
        for claim, text in zip(claims, items)
    ]


def annotate(
    doc: Document,
    gateway: Gateway,
    fuzzy_threshold: float = DEFAULT_FUZZY_THRESHOLD,
) -> AnnotatedDocument:
    """Full passive pipeline; deterministic under the mock provider."""
    extracted = extract_claims(doc, gateway)
    matched: list[ClaimSpan] = []
    unmatched: list[str] = []
    for claim in extracted:
        try:
            matched.append(match_span(doc, claim, fuzzy_threshold))
        except NoMatch:
            unmatched.append(claim)
    retained = resolve_overlaps(matched)
    retained_ids = {claim.claim_id for claim in retained}
    overlapping = tuple(
        claim.claim_text for claim in matched if claim.claim_id not in retained_ids
    )
    counters = generate_counters(doc, retained, gateway)
    return AnnotatedDocument(
        document=doc,
        claims=tuple(retained),
        counters=tuple(counters),
        metadata=PipelineMetadata(
            extracted=len(extracted),
            retained=len(retained),
            unmatched=tuple(unmatched),
            overlapping=overlapping,
        ),
    )


def exact_claims_verbatim(annotated: AnnotatedDocument) -> bool:
    """Invariant check: Exact-kind spans recover the claim text bit-exactly."""
    return all(
        span_text(annotated.document, claim.span) == claim.claim_text
        for claim in annotated.claims
        if claim.match_kind == MatchKind.EXACT
    )

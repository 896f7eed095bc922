"""Align extracted claim text to source spans.

Extractors are asked to copy claims verbatim, but real providers drift on
case, quotes, and punctuation, and sometimes paraphrase outright. Matching is
therefore tiered:

* tier 1 (Exact): first occurrence of the claim as a raw substring.
* tier 2 (Normalized): locate the claim's normal form as a substring of the
  body's normal form (lowercase, whitespace runs collapsed, per-token edge
  punctuation stripped, curly quotes and dashes mapped to straight forms) and
  project the leftmost occurrence back to original offsets.
* tier 3 (Fuzzy): best sentence window by normalized token-sequence
  similarity, ``2 * lcs / (len_a + len_b)``, accepted at or above a threshold.

Projection is per character: every character of the normalized body remembers
the original code point it came from, so a normalized match maps back to the
smallest original region covering it, even when the match cuts into a token.
When the matched region ends at a sentence boundary, the trailing run of
sentence punctuation is included so highlights look natural.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from enum import Enum

from .core import Span


class MatchKind(Enum):
    EXACT = "exact"
    NORMALIZED = "normalized"
    FUZZY = "fuzzy"


class NoMatch(LookupError):
    """No tier produced an acceptable span for the claim."""


DEFAULT_FUZZY_THRESHOLD = 0.85

# Curly quotes and dash variants map 1:1 to straight forms, which keeps
# character offsets stable under translation.
_QUOTE_DASH_MAP = str.maketrans(
    {
        "‘": "'",
        "’": "'",
        "‚": "'",
        "‛": "'",
        "“": '"',
        "”": '"',
        "„": '"',
        "‐": "-",
        "‑": "-",
        "‒": "-",
        "–": "-",
        "—": "-",
        "―": "-",
    }
)

_TOKEN_RE = re.compile(r"\S+")
_SENTENCE_END = ".!?"


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _lower_chars(text: str) -> str:
    """Per-character lowercase, so each output run maps to one input char."""
    return "".join(ch.lower() for ch in text)


@dataclass(frozen=True)
class NormToken:
    """A normalized token core and where it came from."""

    key: str
    start: int
    end: int


def normalize_tokens(text: str) -> list[NormToken]:
    """Tokenize on whitespace and normalize each token.

    Tokens whose core is empty after stripping edge punctuation (e.g. a bare
    dash) vanish from the normalized sequence but may still sit inside a
    matched region.
    """
    tokens: list[NormToken] = []
    for match in _TOKEN_RE.finditer(text):
        raw = match.group().translate(_QUOTE_DASH_MAP)
        lo, hi = 0, len(raw)
        while lo < hi and _is_punct(raw[lo]):
            lo += 1
        while hi > lo and _is_punct(raw[hi - 1]):
            hi -= 1
        if lo == hi:
            continue
        tokens.append(
            NormToken(
                key=_lower_chars(raw[lo:hi]),
                start=match.start() + lo,
                end=match.start() + hi,
            )
        )
    return tokens


def normalize_text(text: str) -> str:
    """Matching-time normal form: space-joined normalized token cores."""
    return " ".join(token.key for token in normalize_tokens(text))


def _extend_sentence_punctuation(body: str, end: int) -> int:
    """Include a trailing run of sentence punctuation after a match."""
    while end < len(body) and body[end] in _SENTENCE_END:
        end += 1
    return end


@dataclass(frozen=True)
class AlignedRegion:
    span: Span
    kind: MatchKind
    score: float


def _exact_tier(body: str, claim: str) -> AlignedRegion | None:
    index = body.find(claim)
    if index < 0:
        return None
    return AlignedRegion(Span(index, index + len(claim)), MatchKind.EXACT, 1.0)


def _normalized_projection(
    body: str, body_tokens: list[NormToken]
) -> tuple[str, list[int]]:
    """The body's normal form plus, per normalized character, the index of
    the original code point it came from (-1 for the joining spaces)."""
    parts: list[str] = []
    origins: list[int] = []
    for position, token in enumerate(body_tokens):
        if position:
            parts.append(" ")
            origins.append(-1)
        for p in range(token.start, token.end):
            lowered = _lower_chars(body[p].translate(_QUOTE_DASH_MAP))
            parts.append(lowered)
            origins.extend([p] * len(lowered))
    return "".join(parts), origins


def _normalized_tier(
    body: str, body_tokens: list[NormToken], claim_keys: list[str]
) -> AlignedRegion | None:
    target = " ".join(claim_keys)
    if not target:
        return None
    normalized_body, origins = _normalized_projection(body, body_tokens)
    position = normalized_body.find(target)
    if position < 0:
        return None
    start = origins[position]
    end = origins[position + len(target) - 1] + 1
    end = _extend_sentence_punctuation(body, end)
    return AlignedRegion(Span(start, end), MatchKind.NORMALIZED, 1.0)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    if len(b) < len(a):
        a, b = b, a
    previous = [0] * (len(a) + 1)
    for item in b:
        current = [0]
        for j, other in enumerate(a, start=1):
            if item == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def token_sequence_similarity(a: list[str], b: list[str]) -> float:
    """Dice-style similarity on token sequences: 2 * lcs / (len_a + len_b)."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return 2.0 * _lcs_length(a, b) / (len(a) + len(b))


def split_sentence_spans(body: str) -> list[Span]:
    """Split the body into sentence spans on sentence punctuation/newlines."""
    spans: list[Span] = []
    start = 0
    i = 0
    length = len(body)
    while i < length:
        ch = body[i]
        if ch in _SENTENCE_END:
            while i + 1 < length and body[i + 1] in _SENTENCE_END:
                i += 1
            spans.append(Span(start, i + 1))
            start = i + 1
        elif ch == "\n":
            if start < i:
                spans.append(Span(start, i))
            start = i + 1
        i += 1
    if start < length and body[start:].strip():
        spans.append(Span(start, length))
    return [s for s in spans if body[s.start : s.end].strip()]


def _fuzzy_tier(
    body: str,
    body_tokens: list[NormToken],
    claim_keys: list[str],
    threshold: float,
) -> AlignedRegion | None:
    if not claim_keys:
        return None
    sentences = split_sentence_spans(body)
    if not sentences:
        return None

    # Token index range per sentence, so windows reuse the shared token list.
    sentence_token_ranges: list[tuple[int, int]] = []
    cursor = 0
    for sent in sentences:
        lo = cursor
        while cursor < len(body_tokens) and body_tokens[cursor].end <= sent.end:
            cursor += 1
        sentence_token_ranges.append((lo, cursor))

    n_claim = len(claim_keys)
    # A window longer than this cannot reach the threshold:
    # 2 * lcs / (a + b) <= 2a / (a + b) < threshold once b > a * (2 - t) / t.
    max_window_tokens = int(n_claim * (2.0 - threshold) / threshold) + 1

    best: tuple[float, int, int] | None = None  # (score, start_sentence, width)
    for width in range(1, len(sentences) + 1):
        any_window_fit = False
        for s in range(len(sentences) - width + 1):
            lo = sentence_token_ranges[s][0]
            hi = sentence_token_ranges[s + width - 1][1]
            if hi - lo > max_window_tokens:
                continue
            any_window_fit = True
            window_keys = [token.key for token in body_tokens[lo:hi]]
            score = token_sequence_similarity(claim_keys, window_keys)
            if score >= threshold:
                if best is None or score > best[0]:
                    best = (score, s, width)
        if not any_window_fit and width > 1:
            break
    if best is None:
        return None
    score, s, width = best
    lo = sentence_token_ranges[s][0]
    hi = sentence_token_ranges[s + width - 1][1]
    if lo == hi:
        return None
    start = body_tokens[lo].start
    end = _extend_sentence_punctuation(body, body_tokens[hi - 1].end)
    return AlignedRegion(Span(start, end), MatchKind.FUZZY, score)


def align_claim(
    body: str, claim: str, fuzzy_threshold: float = DEFAULT_FUZZY_THRESHOLD
) -> AlignedRegion:
    """Locate ``claim`` in ``body`` through the three matching tiers.

    Raises NoMatch when every tier fails; callers drop the claim from
    highlights but keep it in pipeline metadata.
    """
    if not claim:
        raise ValueError("claim must be non-empty")
    region = _exact_tier(body, claim)
    if region is not None:
        return region
    body_tokens = normalize_tokens(body)
    claim_keys = [token.key for token in normalize_tokens(claim)]
    region = _normalized_tier(body, body_tokens, claim_keys)
    if region is not None:
        return region
    region = _fuzzy_tier(body, body_tokens, claim_keys, fuzzy_threshold)
    if region is not None:
        return region
    raise NoMatch(f"claim not locatable in document: {claim!r}")

"""Retrieval-augmented Q&A over a single article.

The document is split into overlapping token-window chunks, each chunk is
embedded once, and questions are answered by retrieving the top-k chunks by
cosine similarity and conditioning the answer template on them plus recent
conversation history. The index is tiny (one article), so it lives in memory
and persists to a small versioned binary file instead of an external vector
database.
"""

from __future__ import annotations

import math
import os
import re
import struct
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import Document, Role, Span
from .gateway import Gateway, TemplateId

DEFAULT_CHUNK_SIZE = 300
DEFAULT_CHUNK_OVERLAP = 60
DEFAULT_TOP_K = 4
DEFAULT_HISTORY_TURNS = 6


class InvalidChunkParams(ValueError):
    """Chunk size/overlap combination violates 0 <= overlap < size."""


class EmptyIndex(ValueError):
    """Retrieval was attempted against an index with no records."""


class IndexFormatError(ValueError):
    """Persisted index file is corrupt or has an unknown format version."""


@dataclass(frozen=True)
class Chunk:
    chunk_index: int
    span: Span
    text: str
    token_count: int


_TOKEN_RE = re.compile(r"\S+")


def chunk_document(
    doc: Document,
    size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> list[Chunk]:
    """Overlapping token windows mapped back to code-point spans.

    With stride = size - overlap, chunk i covers tokens
    [i * stride, i * stride + size) clipped to the document end, giving
    ceil((total - size) / stride) + 1 chunks (or one when the document fits).
    """
    if size <= 0 or overlap < 0 or overlap >= size:
        raise InvalidChunkParams(f"need 0 <= overlap < size, got {size=} {overlap=}")
    token_spans = [(m.start(), m.end()) for m in _TOKEN_RE.finditer(doc.body)]
    total = len(token_spans)
    if total == 0:
        raise InvalidChunkParams("document has no tokens")
    stride = size - overlap
    if total <= size:
        count = 1
    else:
        count = math.ceil((total - size) / stride) + 1
    chunks = []
    for i in range(count):
        first = i * stride
        last = min(first + size, total)
        start = token_spans[first][0]
        end = token_spans[last - 1][1]
        chunks.append(
            Chunk(
                chunk_index=i,
                span=Span(start, end),
                text=doc.body[start:end],
                token_count=last - first,
            )
        )
    return chunks


@dataclass(frozen=True)
class VectorIndex:
    doc_id: str
    dimension: int
    records: tuple[tuple[int, np.ndarray], ...]

    def __len__(self) -> int:
        return len(self.records)


def build_index(
    doc: Document,
    gateway: Gateway,
    size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> tuple[VectorIndex, list[Chunk]]:
    """Chunk and embed the document. All embeddings are computed before any
    state is visible, so a provider failure leaves nothing half-built."""
    chunks = chunk_document(doc, size=size, overlap=overlap)
    vectors = gateway.embed([chunk.text for chunk in chunks])
    dimension = len(vectors[0])
    records = tuple(
        (chunk.chunk_index, np.asarray(vec, dtype=np.float64))
        for chunk, vec in zip(chunks, vectors)
    )
    return VectorIndex(doc_id=doc.doc_id, dimension=dimension, records=records), chunks


def cosine_score(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity with a zero-vector guard: degenerate vectors rank
    last instead of crashing the ranking."""
    norm_a = math.sqrt(float(np.dot(a, a)))
    norm_b = math.sqrt(float(np.dot(b, b)))
    if norm_a == 0.0 or norm_b == 0.0:
        return float("-inf")
    return float(np.dot(a, b)) / (norm_a * norm_b)


def rank_records(
    records: tuple[tuple[int, np.ndarray], ...] | list[tuple[int, np.ndarray]],
    query_vec: np.ndarray,
    k: int,
) -> list[tuple[int, float]]:
    """Top-k by cosine score descending; ties break on ascending chunk index."""
    scored = [(idx, cosine_score(vec, query_vec)) for idx, vec in records]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[: max(0, k)]


def retrieve(
    index: VectorIndex, query: str, gateway: Gateway, k: int = DEFAULT_TOP_K
) -> list[tuple[int, float]]:
    """Rank index records against the embedded query. k is clipped to the
    record count."""
    if len(index) == 0:
        raise EmptyIndex(f"index for {index.doc_id} has no records")
    (query_vec,) = gateway.embed([query])
    return rank_records(index.records, query_vec, min(k, len(index)))


# -- persisted index file -----------------------------------------------------
#
# Layout (little-endian):
#   magic "CPVIDX01"            8 bytes
#   format version              u32     (currently 1)
#   doc_id length, doc_id       u32 + utf-8 bytes
#   dimension                   u32
#   record count                u32
#   records: chunk_index u32, then dimension * f32 components

INDEX_MAGIC = b"CPVIDX01"
INDEX_FORMAT_VERSION = 1


def write_index(index: VectorIndex, path: str | Path) -> None:
    """Write atomically: serialize to a temp file, then rename into place."""
    path = Path(path)
    doc_id_bytes = index.doc_id.encode("utf-8")
    parts = [
        INDEX_MAGIC,
        struct.pack("<I", INDEX_FORMAT_VERSION),
        struct.pack("<I", len(doc_id_bytes)),
        doc_id_bytes,
        struct.pack("<I", index.dimension),
        struct.pack("<I", len(index.records)),
    ]
    for chunk_index, vec in index.records:
        parts.append(struct.pack("<I", chunk_index))
        parts.append(struct.pack(f"<{index.dimension}f", *vec.astype(np.float32)))
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    tmp.write_bytes(b"".join(parts))
    os.replace(tmp, path)


def read_index(path: str | Path) -> VectorIndex:
    data = Path(path).read_bytes()
    if data[:8] != INDEX_MAGIC:
        raise IndexFormatError("bad magic; not an index file")
    offset = 8
    (version,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if version != INDEX_FORMAT_VERSION:
        raise IndexFormatError(f"unknown index format version {version}")
    (doc_id_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    doc_id = data[offset : offset + doc_id_len].decode("utf-8")
    offset += doc_id_len
    (dimension,) = struct.unpack_from("<I", data, offset)
    offset += 4
    (count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    record_size = 4 + 4 * dimension
    if len(data) - offset != count * record_size:
        raise IndexFormatError("truncated index file")
    records = []
    for _ in range(count):
        (chunk_index,) = struct.unpack_from("<I", data, offset)
        offset += 4
        components = struct.unpack_from(f"<{dimension}f", data, offset)
        offset += 4 * dimension
        records.append((chunk_index, np.asarray(components, dtype=np.float64)))
    return VectorIndex(doc_id=doc_id, dimension=dimension, records=tuple(records))


# -- conversation -------------------------------------------------------------


@dataclass(frozen=True)
class QaTurn:
    role: Role
    text: str
    cited_chunks: tuple[int, ...] = ()
    timestamp: float = 0.0


@dataclass(frozen=True)
class QaConversation:
    """Ordered turns, roles strictly alternating starting with the user."""

    conversation_id: str
    doc_id: str
    turns: tuple[QaTurn, ...] = ()

    def validate(self) -> None:
        for i, turn in enumerate(self.turns):
            expected = Role.USER if i % 2 == 0 else Role.BOT
            if turn.role is not expected:
                raise ValueError(f"turn {i} must be {expected.value}")


def format_history(turns: tuple[QaTurn, ...], window: int) -> str:
    recent = turns[-window:] if window else ()
    if not recent:
        return "(none)"
    return "\n".join(f"{turn.role.value}: {turn.text}" for turn in recent)


def answer(
    doc: Document,
    index: VectorIndex,
    chunks: list[Chunk],
    conversation: QaConversation,
    question: str,
    gateway: Gateway,
    k: int = DEFAULT_TOP_K,
    history_turns: int = DEFAULT_HISTORY_TURNS,
    clock=time.time,
) -> QaConversation:
    """Append a user turn and a grounded bot turn to the conversation.

    The bot turn cites the retrieved chunk indices in rank order; the full
    history stays on the conversation for the caller to display.
    """
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    ranking = retrieve(index, question, gateway, k=k)
    chunk_by_index = {chunk.chunk_index: chunk for chunk in chunks}
    excerpt_block = "\n\n".join(
        f"[{idx}] {chunk_by_index[idx].text}" for idx, _ in ranking
    )
    result = gateway.complete_template(
        TemplateId.QA_ANSWER,
        {
            "chunks": excerpt_block,
            "history": format_history(conversation.turns, history_turns),
            "question": question,
        },
        fixture_key=f"{doc.doc_id}__q{len(conversation.turns) // 2}",
    )
    now = clock()
    return replace(
        conversation,
        turns=conversation.turns
        + (
            QaTurn(role=Role.USER, text=question, timestamp=now),
            QaTurn(
                role=Role.BOT,
                text=result.text,
                cited_chunks=tuple(idx for idx, _ in ranking),
                timestamp=now,
            ),
        ),
    )

"""File persistence for every artifact the service produces.

Layout under a data root:

    docs/<doc_id>/document.json
    docs/<doc_id>/annotations.json
    docs/<doc_id>/chunks.json
    docs/<doc_id>/index.bin
    docs/<doc_id>/context.json
    docs/<doc_id>/status.json
    docs/<doc_id>/qa/<conversation_id>.json
    docs/<doc_id>/debates/<session_id>.json
    events/<session_id>.jsonl

Each JSON artifact carries a schema_version; loads reject versions they do
not know. Writes go to a temp file in the same directory and land with
os.replace, so a reader (or a restarted process) never sees a torn artifact
at the final path.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .analytics import SessionEvent, events_from_jsonl, events_to_jsonl
from .annotate import AnnotatedDocument, ClaimSpan, CounterArgument, PipelineMetadata
from .context import ContextSummary, SearchSnippet
from .core import Document, Lean, Role, Span
from .debate import DebateSession, replay_events
from .matching import MatchKind
from .ragqa import Chunk, QaConversation, QaTurn, VectorIndex, read_index, write_index

SCHEMA_VERSION = 1


class StorageError(RuntimeError):
    pass


class ArtifactNotFound(StorageError):
    pass


class SchemaVersionError(StorageError):
    pass


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write(text)
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(tmp, path)


def _dump(payload: dict) -> str:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def _check_version(payload: dict, path: Path) -> dict:
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: schema_version {version!r}, expected {SCHEMA_VERSION}")
    return payload


# -- serde --------------------------------------------------------------------


def document_to_dict(doc: Document) -> dict:
    return {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "body": doc.body,
        "lean": doc.lean.value,
        "source_url": doc.source_url,
    }


def document_from_dict(raw: dict) -> Document:
    return Document(
        doc_id=raw["doc_id"],
        title=raw["title"],
        body=raw["body"],
        lean=Lean(raw["lean"]),
        source_url=raw.get("source_url"),
    )


def _span_to_dict(span: Span) -> dict:
    return {"start": span.start, "end": span.end}


def _claim_to_dict(claim: ClaimSpan) -> dict:
    return {
        "claim_id": claim.claim_id,
        "claim_text": claim.claim_text,
        "span": _span_to_dict(claim.span),
        "match_kind": claim.match_kind.value,
        "match_score": claim.match_score,
    }


def _claim_from_dict(raw: dict) -> ClaimSpan:
    return ClaimSpan(
        claim_id=raw["claim_id"],
        claim_text=raw["claim_text"],
        span=Span(raw["span"]["start"], raw["span"]["end"]),
        match_kind=MatchKind(raw["match_kind"]),
        match_score=raw["match_score"],
    )


def annotations_to_dict(annotated: AnnotatedDocument) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "document": document_to_dict(annotated.document),
        "claims": [_claim_to_dict(c) for c in annotated.claims],
        "counters": [
            {
                "claim_id": c.claim_id,
                "summary": c.summary,
                "full_text": c.full_text,
                "provenance": c.provenance,
            }
            for c in annotated.counters
        ],
        "metadata": {
            "extracted": annotated.metadata.extracted,
            "retained": annotated.metadata.retained,
            "unmatched": list(annotated.metadata.unmatched),
            "overlapping": list(annotated.metadata.overlapping),
        },
    }


def annotations_from_dict(raw: dict) -> AnnotatedDocument:
    meta = raw["metadata"]
    return AnnotatedDocument(
        document=document_from_dict(raw["document"]),
        claims=tuple(_claim_from_dict(c) for c in raw["claims"]),
        counters=tuple(
            CounterArgument(
                claim_id=c["claim_id"],
                summary=c["summary"],
                full_text=c["full_text"],
                provenance=c["provenance"],
            )
            for c in raw["counters"]
        ),
        metadata=PipelineMetadata(
            extracted=meta["extracted"],
            retained=meta["retained"],
            unmatched=tuple(meta["unmatched"]),
            overlapping=tuple(meta["overlapping"]),
        ),
    )


def context_to_dict(summary: ContextSummary) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "query_title": summary.query_title,
        "snippets": [
            {"title": s.title, "url": s.url, "snippet": s.snippet, "rank": s.rank}
            for s in summary.snippets
        ],
        "summary_text": summary.summary_text,
        "generated_at": summary.generated_at,
        "article_only": summary.article_only,
    }


def context_from_dict(raw: dict) -> ContextSummary:
    return ContextSummary(
        query_title=raw["query_title"],
        snippets=tuple(
            SearchSnippet(title=s["title"], url=s["url"], snippet=s["snippet"], rank=s["rank"])
            for s in raw["snippets"]
        ),
        summary_text=raw["summary_text"],
        generated_at=raw["generated_at"],
        article_only=raw["article_only"],
    )


def conversation_to_dict(conversation: QaConversation) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "conversation_id": conversation.conversation_id,
        "doc_id": conversation.doc_id,
        "turns": [
            {
                "role": t.role.value,
                "text": t.text,
                "cited_chunks": list(t.cited_chunks),
                "timestamp": t.timestamp,
            }
            for t in conversation.turns
        ],
    }


def conversation_from_dict(raw: dict) -> QaConversation:
    return QaConversation(
        conversation_id=raw["conversation_id"],
        doc_id=raw["doc_id"],
        turns=tuple(
            QaTurn(
                role=Role(t["role"]),
                text=t["text"],
                cited_chunks=tuple(t["cited_chunks"]),
                timestamp=t["timestamp"],
            )
            for t in raw["turns"]
        ),
    )


def chunks_to_dict(chunks: list[Chunk]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "chunks": [
            {
                "chunk_index": c.chunk_index,
                "span": _span_to_dict(c.span),
                "text": c.text,
                "token_count": c.token_count,
            }
            for c in chunks
        ],
    }


def chunks_from_dict(raw: dict) -> list[Chunk]:
    return [
        Chunk(
            chunk_index=c["chunk_index"],
            span=Span(c["span"]["start"], c["span"]["end"]),
            text=c["text"],
            token_count=c["token_count"],
        )
        for c in raw["chunks"]
    ]


def debate_to_dict(session: DebateSession) -> dict:
    return {"schema_version": SCHEMA_VERSION, "events": list(session.events)}


def debate_from_dict(raw: dict) -> DebateSession:
    return replay_events(raw["events"])


# -- the store ----------------------------------------------------------------


class ArtifactStore:
    """All reads and writes for one data root.

    A store assumes it is the root's only writer. Opening one sweeps temp
    files orphaned by a crash mid-write; the final artifacts they were
    headed for are untouched, so dropping them is always safe.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        if self.root.is_dir():
            for stale in self.root.rglob("*.tmp*"):
                stale.unlink(missing_ok=True)

    def doc_dir(self, doc_id: str) -> Path:
        return self.root / "docs" / doc_id

    def list_documents(self) -> list[str]:
        docs = self.root / "docs"
        if not docs.is_dir():
            return []
        return sorted(p.name for p in docs.iterdir() if (p / "document.json").is_file())

    def _load_json(self, path: Path) -> dict:
        if not path.is_file():
            raise ArtifactNotFound(str(path))
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StorageError(f"{path}: invalid JSON: {exc}") from exc
        return _check_version(payload, path)

    def _write_json(self, path: Path, payload: dict) -> None:
        atomic_write_text(path, _dump(payload))

    # documents

    def save_document(self, doc: Document) -> None:
        payload = {"schema_version": SCHEMA_VERSION, **document_to_dict(doc)}
        self._write_json(self.doc_dir(doc.doc_id) / "document.json", payload)

    def load_document(self, doc_id: str) -> Document:
        raw = self._load_json(self.doc_dir(doc_id) / "document.json")
        return document_from_dict(raw)

    # pipeline status

    def save_status(self, doc_id: str, state: str, detail: str = "") -> None:
        payload = {"schema_version": SCHEMA_VERSION, "state": state, "detail": detail}
        self._write_json(self.doc_dir(doc_id) / "status.json", payload)

    def load_status(self, doc_id: str) -> dict:
        try:
            return self._load_json(self.doc_dir(doc_id) / "status.json")
        except ArtifactNotFound:
            return {"schema_version": SCHEMA_VERSION, "state": "missing", "detail": ""}

    # annotations

    def save_annotations(self, annotated: AnnotatedDocument) -> None:
        path = self.doc_dir(annotated.document.doc_id) / "annotations.json"
        self._write_json(path, annotations_to_dict(annotated))

    def load_annotations(self, doc_id: str) -> AnnotatedDocument:
        return annotations_from_dict(self._load_json(self.doc_dir(doc_id) / "annotations.json"))

    def has_annotations(self, doc_id: str) -> bool:
        return (self.doc_dir(doc_id) / "annotations.json").is_file()

    # chunks and vector index

    def save_chunks(self, doc_id: str, chunks: list[Chunk]) -> None:
        self._write_json(self.doc_dir(doc_id) / "chunks.json", chunks_to_dict(chunks))

    def load_chunks(self, doc_id: str) -> list[Chunk]:
        return chunks_from_dict(self._load_json(self.doc_dir(doc_id) / "chunks.json"))

    def save_index(self, index: VectorIndex) -> None:
        path = self.doc_dir(index.doc_id) / "index.bin"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_index(index, path)

    def load_index(self, doc_id: str) -> VectorIndex:
        path = self.doc_dir(doc_id) / "index.bin"
        if not path.is_file():
            raise ArtifactNotFound(str(path))
        return read_index(path)

    def has_index(self, doc_id: str) -> bool:
        return (self.doc_dir(doc_id) / "index.bin").is_file()

    # context summaries

    def save_context(self, doc_id: str, summary: ContextSummary) -> None:
        self._write_json(self.doc_dir(doc_id) / "context.json", context_to_dict(summary))

    def load_context(self, doc_id: str) -> ContextSummary:
        return context_from_dict(self._load_json(self.doc_dir(doc_id) / "context.json"))

    # QA conversations

    def save_conversation(self, conversation: QaConversation) -> None:
        path = self.doc_dir(conversation.doc_id) / "qa" / f"{conversation.conversation_id}.json"
        self._write_json(path, conversation_to_dict(conversation))

    def load_conversation(self, doc_id: str, conversation_id: str) -> QaConversation:
        path = self.doc_dir(doc_id) / "qa" / f"{conversation_id}.json"
        return conversation_from_dict(self._load_json(path))

    def list_conversations(self, doc_id: str) -> list[str]:
        qa = self.doc_dir(doc_id) / "qa"
        if not qa.is_dir():
            return []
        return sorted(p.stem for p in qa.glob("*.json"))

    # debate sessions

    def save_debate(self, session: DebateSession) -> None:
        path = self.doc_dir(session.doc_id) / "debates" / f"{session.session_id}.json"
        self._write_json(path, debate_to_dict(session))

    def load_debate(self, doc_id: str, session_id: str) -> DebateSession:
        path = self.doc_dir(doc_id) / "debates" / f"{session_id}.json"
        return debate_from_dict(self._load_json(path))

    def list_debates(self, doc_id: str) -> list[str]:
        debates = self.doc_dir(doc_id) / "debates"
        if not debates.is_dir():
            return []
        return sorted(p.stem for p in debates.glob("*.json"))

    # analytics events (append-only JSONL per session)

    def events_path(self, session_id: str) -> Path:
        return self.root / "events" / f"{session_id}.jsonl"

    def append_events(self, session_id: str, events: list[SessionEvent]) -> None:
        path = self.events_path(session_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(events_to_jsonl(events))
            handle.flush()
            os.fsync(handle.fileno())

    def load_events(self, session_id: str) -> list[SessionEvent]:
        """Anything before a corrupt final line is returned; append is not
        atomic, so a crash may tear only the tail."""
        path = self.events_path(session_id)
        if not path.is_file():
            return []
        lines = path.read_text(encoding="utf-8").splitlines()
        events: list[SessionEvent] = []
        for position, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                events.extend(events_from_jsonl(line))
            except (json.JSONDecodeError, KeyError, ValueError):
                if position == len(lines) - 1:
                    break
                raise StorageError(f"{path}: corrupt event at line {position + 1}")
        return events

    def list_event_sessions(self) -> list[str]:
        events = self.root / "events"
        if not events.is_dir():
            return []
        return sorted(p.stem for p in events.glob("*.jsonl"))

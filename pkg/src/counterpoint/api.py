"""HTTP service tying the pipeline together for the UI and batch use.

Endpoints return JSON payloads mirroring the persisted artifact schemas;
errors are always ``{"code": ..., "message": ...}``. Uploading a document
kicks off annotation and index building away from the request path
("thread" mode); "manual" mode defers jobs until ``run_pending`` is called,
which makes pending-state behavior directly testable.

Per-document and per-session critical sections use exclusive locks keyed by
id; endpoints are plain ``def`` routes so they run in the framework's
worker pool where those locks apply.
"""

from __future__ import annotations

import threading
import time
import uuid
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException
from pydantic import BaseModel

from .analytics import (
    EmptySession,
    EventKind,
    EventLog,
    Feature,
    OutOfOrderEvent,
    SessionEvent,
    UnmatchedEnter,
    UnmatchedExit,
    time_per_feature,
)
from .annotate import CounterParseFailure, annotate
from .config import AppConfig, load_config
from .context import (
    SearchProvider,
    SearchUnavailable,
    fetch_context,
    search_provider_from_env,
    summarize_context,
)
from .core import EmptyDocument, Lean, Span, SpanOutOfRange, ingest_document
from .context import explain_selection
from .debate import (
    NotABotTurn,
    RegenerationFailed,
    RegenerationLimitExceeded,
    SessionClosed,
    Thumbs,
    give_feedback,
    open_debate,
    rebut,
)
from .gateway import Gateway, GatewayError, MissingPlaceholder, gateway_from_env
from .ragqa import QaConversation, answer, build_index
from .storage import (
    ArtifactNotFound,
    ArtifactStore,
    StorageError,
    annotations_to_dict,
    context_to_dict,
    conversation_to_dict,
)

_ERROR_MAP: list[tuple[type[Exception], int, str]] = [
    (ArtifactNotFound, 404, "NotFound"),
    (EmptyDocument, 422, "EmptyDocument"),
    (SpanOutOfRange, 422, "SpanOutOfRange"),
    (NotABotTurn, 422, "NotABotTurn"),
    (EmptySession, 422, "EmptySession"),
    (OutOfOrderEvent, 400, "OutOfOrderEvent"),
    (UnmatchedExit, 400, "UnmatchedExit"),
    (UnmatchedEnter, 400, "UnmatchedEnter"),
    (SessionClosed, 409, "SessionClosed"),
    (RegenerationLimitExceeded, 409, "RegenerationLimitExceeded"),
    (RegenerationFailed, 503, "RegenerationFailed"),
    (SearchUnavailable, 503, "SearchUnavailable"),
    (MissingPlaceholder, 500, "InternalError"),
    (GatewayError, 503, "ProviderUnavailable"),
    (CounterParseFailure, 503, "ProviderUnavailable"),
    (StorageError, 500, "StorageError"),
    (ValueError, 422, "InvalidRequest"),
]


class UploadRequest(BaseModel):
    title: str
    body: str
    lean: str = "unknown"


class QaRequest(BaseModel):
    question: str
    conversation_id: str | None = None


class DebateRequest(BaseModel):
    message: str
    session_id: str | None = None


class FeedbackRequest(BaseModel):
    thumbs: str


class ExplainRequest(BaseModel):
    doc_id: str
    start: int
    end: int


class EventItem(BaseModel):
    feature: str
    kind: str
    timestamp_ms: int
    session_id: str | None = None


class Pipeline:
    """Runs annotate + index build per document, off the request path."""

    def __init__(self, state: "ServiceState", mode: str) -> None:
        self.state = state
        self.mode = mode
        self._pending: list[str] = []
        self._guard = threading.Lock()

    def schedule(self, doc_id: str) -> None:
        if self.mode == "thread":
            threading.Thread(target=self.run_one, args=(doc_id,), daemon=True).start()
        else:
            with self._guard:
                self._pending.append(doc_id)

    def run_pending(self) -> int:
        with self._guard:
            batch, self._pending = self._pending, []
        for doc_id in batch:
            self.run_one(doc_id)
        return len(batch)

    def run_one(self, doc_id: str) -> None:
        state = self.state
        with state.lock(f"doc:{doc_id}"):
            doc = state.store.load_document(doc_id)
            try:
                annotated = annotate(
                    doc, state.gateway,
                    fuzzy_threshold=state.config.pipeline.fuzzy_threshold,
                )
                index, chunks = build_index(
                    doc, state.gateway,
                    size=state.config.pipeline.chunk_size,
                    overlap=state.config.pipeline.chunk_overlap,
                )
            except (GatewayError, CounterParseFailure) as exc:
                state.store.save_status(doc_id, "failed", str(exc))
                return
            state.store.save_annotations(annotated)
            state.store.save_chunks(doc_id, chunks)
            state.store.save_index(index)
            state.store.save_status(doc_id, "ready")


class ServiceState:
    def __init__(
        self,
        config: AppConfig,
        store: ArtifactStore,
        gateway: Gateway,
        search: SearchProvider,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.config = config
        self.store = store
        self.gateway = gateway
        self.search = search
        self.clock = clock
        self.pipeline = Pipeline(self, config.service.pipeline_mode)
        self.event_log = EventLog()
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._session_docs: dict[str, str] = {}
        self._restore()

    def lock(self, key: str) -> threading.Lock:
        with self._locks_guard:
            if key not in self._locks:
                self._locks[key] = threading.Lock()
            return self._locks[key]

    def _restore(self) -> None:
        for session_id in self.store.list_event_sessions():
            for event in self.store.load_events(session_id):
                self.event_log.record(event)
        for doc_id in self.store.list_documents():
            for session_id in self.store.list_debates(doc_id):
                self._session_docs[session_id] = doc_id

    def resume_incomplete(self) -> None:
        """Re-queue documents whose pipeline never reached ready (crash or
        earlier failure)."""
        for doc_id in self.store.list_documents():
            if self.store.load_status(doc_id).get("state") != "ready":
                self.store.save_status(doc_id, "pending")
                self.pipeline.schedule(doc_id)

    def doc_for_session(self, session_id: str) -> str:
        doc_id = self._session_docs.get(session_id)
        if doc_id is None:
            raise ArtifactNotFound(f"debate session {session_id}")
        return doc_id

    def register_session(self, session_id: str, doc_id: str) -> None:
        self._session_docs[session_id] = doc_id


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _pending_response() -> JSONResponse:
    return JSONResponse(status_code=202, content={"status": "pending"})


def create_app(
    config: AppConfig | None = None,
    gateway: Gateway | None = None,
    search: SearchProvider | None = None,
    clock: Callable[[], float] = time.time,
) -> FastAPI:
    config = config if config is not None else load_config()
    store = ArtifactStore(config.service.data_dir)
    gateway = gateway if gateway is not None else gateway_from_env(_gateway_env(config))
    search = search if search is not None else search_provider_from_env(_search_env(config))
    state = ServiceState(config, store, gateway, search, clock=clock)

    app = FastAPI(title="counterpoint", docs_url=None, redoc_url=None)
    app.state.service = state

    def handler_for(status: int, code: str):
        def handle(request: Request, exc: Exception) -> JSONResponse:
            return _error_response(status, code, str(exc))

        return handle

    for exc_type, status, code in _ERROR_MAP:
        app.add_exception_handler(exc_type, handler_for(status, code))

    def handle_validation(request: Request, exc: Exception) -> JSONResponse:
        return _error_response(422, "ValidationError", str(exc))

    app.add_exception_handler(RequestValidationError, handle_validation)

    def handle_http(request: Request, exc: Exception) -> JSONResponse:
        """Router-level 404/405 and friends, kept to the {code, message} shape."""
        status = getattr(exc, "status_code", 500)
        code = {404: "NotFound", 405: "MethodNotAllowed"}.get(status, "HttpError")
        return _error_response(status, code, str(getattr(exc, "detail", exc)))

    app.add_exception_handler(StarletteHTTPException, handle_http)

    def gate_ready(doc_id: str) -> JSONResponse | None:
        """404 for unknown docs, 202 while pending, 503 after failure."""
        if not (store.doc_dir(doc_id) / "document.json").is_file():
            return _error_response(404, "NotFound", f"document {doc_id}")
        status = store.load_status(doc_id)
        if status["state"] in ("pending", "missing"):
            return _pending_response()
        if status["state"] == "failed":
            return _error_response(503, "ProviderUnavailable", status.get("detail", ""))
        return None

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/documents")
    def upload(payload: UploadRequest) -> dict:
        doc = ingest_document(payload.body, payload.title, lean=Lean(payload.lean))
        with state.lock(f"doc:{doc.doc_id}"):
            status = store.load_status(doc.doc_id)
            if status["state"] in ("ready", "pending"):
                return {"doc_id": doc.doc_id, "status": status["state"]}
            store.save_document(doc)
            store.save_status(doc.doc_id, "pending")
        state.pipeline.schedule(doc.doc_id)
        return {"doc_id": doc.doc_id, "status": "pending"}

    @app.get("/documents/{doc_id}/annotations")
    def annotations(doc_id: str):
        gated = gate_ready(doc_id)
        if gated is not None:
            return gated
        return annotations_to_dict(store.load_annotations(doc_id))

    @app.post("/documents/{doc_id}/context")
    def context(doc_id: str):
        with state.lock(f"doc:{doc_id}"):
            try:
                return context_to_dict(store.load_context(doc_id))
            except ArtifactNotFound:
                pass
            doc = store.load_document(doc_id)
            snippets = fetch_context(
                doc.title, state.search, limit=config.pipeline.snippet_count
            )
            summary = summarize_context(doc, snippets, state.gateway, clock=state.clock)
            store.save_context(doc_id, summary)
            return context_to_dict(summary)

    @app.post("/documents/{doc_id}/qa")
    def qa(doc_id: str, payload: QaRequest):
        gated = gate_ready(doc_id)
        if gated is not None:
            return gated
        with state.lock(f"doc:{doc_id}"):
            doc = store.load_document(doc_id)
            index = store.load_index(doc_id)
            chunks = store.load_chunks(doc_id)
            if payload.conversation_id:
                conversation = store.load_conversation(doc_id, payload.conversation_id)
            else:
                conversation = QaConversation(
                    conversation_id=uuid.uuid4().hex[:12], doc_id=doc_id
                )
            updated = answer(
                doc, index, chunks, conversation, payload.question, state.gateway,
                k=config.pipeline.top_k, clock=state.clock,
            )
            store.save_conversation(updated)
            return conversation_to_dict(updated)

    @app.post("/documents/{doc_id}/debate")
    def debate(doc_id: str, payload: DebateRequest):
        with state.lock(f"doc:{doc_id}"):
            doc = store.load_document(doc_id)
            if payload.session_id:
                session = store.load_debate(doc_id, payload.session_id)
                session = rebut(session, payload.message, doc, state.gateway, clock=state.clock)
            else:
                session = open_debate(
                    doc, payload.message, state.gateway,
                    max_regens=config.pipeline.max_regens, clock=state.clock,
                )
            store.save_debate(session)
            state.register_session(session.session_id, doc_id)
            return _debate_response(session)

    @app.post("/debate/{session_id}/turns/{turn_index}/feedback")
    def feedback(session_id: str, turn_index: int, payload: FeedbackRequest):
        doc_id = state.doc_for_session(session_id)
        with state.lock(f"doc:{doc_id}"):
            doc = store.load_document(doc_id)
            session = store.load_debate(doc_id, session_id)
            session = give_feedback(
                session, turn_index, Thumbs(payload.thumbs), doc, state.gateway,
                clock=state.clock,
            )
            store.save_debate(session)
            return _debate_response(session)

    @app.post("/selections/explain")
    def explain(payload: ExplainRequest):
        doc = store.load_document(payload.doc_id)
        explanation = explain_selection(doc, Span(payload.start, payload.end), state.gateway)
        return {
            "selected_text": explanation.selected_text,
            "span": {"start": explanation.span.start, "end": explanation.span.end},
            "mode": explanation.mode.value,
            "explanation": explanation.explanation,
        }

    @app.post("/sessions/{session_id}/events", status_code=204)
    def post_events(session_id: str, payload: list[EventItem]) -> None:
        with state.lock(f"session:{session_id}"):
            parsed = []
            for item in payload:
                if item.session_id is not None and item.session_id != session_id:
                    raise ValueError("event session_id does not match the path")
                parsed.append(
                    SessionEvent(
                        session_id=session_id,
                        feature=Feature(item.feature),
                        kind=EventKind(item.kind),
                        timestamp_ms=item.timestamp_ms,
                    )
                )
            scratch = EventLog()
            for event in state.event_log.events(session_id):
                scratch.record(event)
            for event in parsed:
                scratch.record(event)
            for event in parsed:
                state.event_log.record(event)
            store.append_events(session_id, parsed)

    @app.get("/sessions/{session_id}/analytics")
    def analytics(session_id: str):
        if not state.event_log.events(session_id):
            return _error_response(404, "NotFound", f"session {session_id}")
        breakdown = time_per_feature(state.event_log, session_id)
        return {
            "session_id": session_id,
            "seconds": {f.value: s for f, s in breakdown.seconds.items()},
            "fractions": {f.value: x for f, x in breakdown.fractions.items()},
            "session_duration_s": breakdown.session_duration_s,
        }

    return app


def _debate_response(session) -> dict:
    return {
        "session_id": session.session_id,
        "doc_id": session.doc_id,
        "status": session.status.value,
        "opening_argument": session.opening_argument,
        "max_regens": session.max_regens,
        "turns": [
            {
                "role": turn.role.value,
                "text": turn.text,
                "timestamp": turn.timestamp,
                "feedback": turn.feedback.value if turn.feedback else None,
                "regeneration_count": turn.regeneration_count,
                "previous_texts": list(turn.previous_texts),
            }
            for turn in session.turns
        ],
    }


def _gateway_env(config: AppConfig) -> dict[str, str]:
    env = {
        "GATEWAY_PROVIDER": config.gateway.provider,
        "GATEWAY_SEED": str(config.gateway.seed),
    }
    if config.gateway.api_key:
        env["GATEWAY_API_KEY"] = config.gateway.api_key
    if config.gateway.base_url:
        env["GATEWAY_BASE_URL"] = config.gateway.base_url
    if config.gateway.fixtures_dir:
        env["GATEWAY_FIXTURES_DIR"] = config.gateway.fixtures_dir
    return env


def _search_env(config: AppConfig) -> dict[str, str]:
    env: dict[str, str] = {}
    if config.search.base_url:
        env["SEARCH_BASE_URL"] = config.search.base_url
    if config.search.api_key:
        env["SEARCH_API_KEY"] = config.search.api_key
    if config.search.fixtures_dir:
        env["SEARCH_FIXTURES_DIR"] = config.search.fixtures_dir
    return env

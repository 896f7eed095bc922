"""Provider-agnostic access to text completion and embedding.

The gateway owns three things:

* a prompt-template catalog (one template per pipeline feature, with the
  few-shot exemplars for counter-argument generation),
* retrying completion calls against a pluggable provider,
* embedding calls for the retrieval index.

A deterministic mock provider makes every pipeline in the repository
reproducible offline: fixture files pin important outputs, and anything
without a fixture falls back to seeded synthetic text. Fixture resolution
order is exact match (template id + input key) first, synthetic second.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np


class TemplateId(Enum):
    CLAIM_EXTRACT = "ClaimExtract"
    COUNTER_GEN = "CounterGen"
    CONTEXT_SUMMARIZE = "ContextSummarize"
    QA_ANSWER = "QaAnswer"
    DEBATE_REBUT = "DebateRebut"
    DEBATE_REGENERATE = "DebateRegenerate"
    SELECTION_EXPLAIN = "SelectionExplain"


class GatewayError(Exception):
    """Base class for gateway failures."""


class MissingPlaceholder(GatewayError):
    """A template placeholder was left unbound at render time."""


class ProviderUnavailable(GatewayError):
    """The provider failed permanently (after retries, or hard error)."""


class ContentRefused(GatewayError):
    """The provider's guardrail refused to answer; not retried."""


class Timeout(GatewayError):
    """The provider did not answer within the configured deadline."""


class TransientProviderError(GatewayError):
    """Internal marker for retryable failures (network blips, empty output)."""


_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt text with named ``{placeholder}`` slots and few-shot exemplars.

    Rendering is a pure, single-pass substitution: exemplars are prepended in
    fixed order, then every placeholder is replaced from the bindings. Text
    substituted in is never re-scanned, so articles containing braces are safe.
    """

    template_id: TemplateId
    text: str
    exemplars: tuple[str, ...] = ()

    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.text))

    def render(self, bindings: dict[str, str]) -> str:
        missing = self.placeholders() - set(bindings)
        if missing:
            raise MissingPlaceholder(
                f"{self.template_id.value}: unbound placeholders {sorted(missing)}"
            )

        def substitute(match: re.Match[str]) -> str:
            return bindings[match.group(1)]

        body = _PLACEHOLDER_RE.sub(substitute, self.text)
        if self.exemplars:
            return "\n\n".join((*self.exemplars, body))
        return body


_COUNTER_EXEMPLARS = (
    "Example claim: Raising the minimum wage kills small businesses.\n"
    "Example counter-argument: Decades of state-level increases show no "
    "systematic rise in small-business closures; higher wages cut turnover "
    "costs, and many owners report steadier, better-trained staff after "
    "an increase.",
    "Example claim: Remote work makes teams less productive.\n"
    "Example counter-argument: Large firm studies find output holds steady "
    "or improves with remote work once meetings adapt, while companies save "
    "on office costs and retain employees who would otherwise quit.",
)

TEMPLATES: dict[TemplateId, PromptTemplate] = {
    TemplateId.CLAIM_EXTRACT: PromptTemplate(
        TemplateId.CLAIM_EXTRACT,
        "You extract the main claims from an opinion article. A claim is a "
        "contestable assertion the author makes. List each claim on its own "
        "line, numbered. Copy the claim text exactly as it appears in the "
        "article, without rewording.\n\n"
        "Title: {title}\n\nArticle:\n{body}",
    ),
    TemplateId.COUNTER_GEN: PromptTemplate(
        TemplateId.COUNTER_GEN,
        "For each claim in the list below, write one concise, persuasive "
        "counter-argument that argues the opposing side. Respond with a "
        "numbered list aligned to the input numbering, exactly one "
        "counter-argument per claim.\n\nClaims:\n{claims}",
        exemplars=_COUNTER_EXEMPLARS,
    ),
    TemplateId.CONTEXT_SUMMARIZE: PromptTemplate(
        TemplateId.CONTEXT_SUMMARIZE,
        "Summarize the broader context around the issue in this article "
        "title, based only on the sources below. Keep the summary neutral: "
        "describe the landscape of the issue without taking a side.\n\n"
        "Article title: {title}\n\nSources:\n{sources}",
    ),
    TemplateId.QA_ANSWER: PromptTemplate(
        TemplateId.QA_ANSWER,
        "Answer the reader's question about the article using only the "
        "excerpts below. If the excerpts do not contain the answer, say so "
        "instead of guessing.\n\nArticle excerpts:\n{chunks}\n\n"
        "Conversation so far:\n{history}\n\nQuestion: {question}",
    ),
    TemplateId.DEBATE_REBUT: PromptTemplate(
        TemplateId.DEBATE_REBUT,
        "You are a debate partner. The reader's opening position on the "
        "article below was: {opening}\n\nDebate the other side: argue the "
        "position opposite to that opening position, and keep arguing that "
        "same side for the whole conversation. Be as brief and persuasive "
        "as possible.\n\nArticle title: {title}\n\nArticle:\n{article}\n\n"
        "Conversation so far:\n{history}\n\nReader: {argument}",
    ),
    TemplateId.DEBATE_REGENERATE: PromptTemplate(
        TemplateId.DEBATE_REGENERATE,
        "Your previous rebuttal did not persuade the reader. Find another "
        "way to persuade them: make a different argument for the same side, "
        "without repeating your earlier points. Be as brief and persuasive "
        "as possible.\n\nArticle title: {title}\n\nConversation so far:\n"
        "{history}\n\nYour previous rebuttal:\n{previous}",
    ),
    TemplateId.SELECTION_EXPLAIN: PromptTemplate(
        TemplateId.SELECTION_EXPLAIN,
        "The reader selected a piece of text from the article.\n\n"
        "Selection: {selection}\n\nSurrounding passage:\n{passage}\n\n"
        "If it's one word, provide its definition. If it's more than that, "
        "use your knowledge to give additional context on the text.",
    ),
}


@dataclass(frozen=True)
class GenerationParams:
    max_tokens: int = 512
    temperature: float = 0.0


# Extraction must be stable (temperature 0); regeneration must be able to
# produce a different answer for the same conversation.
DEFAULT_PARAMS: dict[TemplateId, GenerationParams] = {
    template_id: GenerationParams() for template_id in TemplateId
}
DEFAULT_PARAMS[TemplateId.DEBATE_REGENERATE] = GenerationParams(temperature=0.7)


@dataclass(frozen=True)
class CompletionRequest:
    template_id: TemplateId
    prompt: str
    params: GenerationParams = GenerationParams()
    # Key used for fixture lookup by the mock provider; callers typically pass
    # the doc id so fixtures can be authored without re-rendering prompts.
    fixture_key: str | None = None
    # Varies synthetic output for regeneration without breaking determinism.
    nonce: int = 0


@dataclass(frozen=True)
class CompletionResult:
    text: str
    provider_id: str
    latency_s: float


class CompletionProvider(Protocol):
    provider_id: str

    def complete_text(self, request: CompletionRequest) -> str: ...


class EmbeddingProvider(Protocol):
    provider_id: str
    embedding_dim: int

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]: ...


@dataclass(frozen=True)
class RetryPolicy:
    """Standard resilience for transient provider failures."""

    attempts: int = 3
    base_delay_s: float = 0.25
    sleep: Callable[[float], None] = time.sleep

    def delays(self) -> list[float]:
        return [self.base_delay_s * (2**i) for i in range(self.attempts - 1)]


def _short_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class MockProvider:
    """Offline provider: fixture files first, seeded synthetic output second.

    Fixture files live in a directory as ``<TemplateId>__<key>.json`` with a
    ``{"text": ...}`` payload, where ``key`` is the request's fixture_key
    (usually a doc id) or, failing that, a sha256 digest of the rendered
    prompt. Requests with a nonzero nonce append ``__n<nonce>``.

    Synthetic output and embeddings are pure functions of (seed, input), so
    every run of the pipeline is byte-reproducible.
    """

    provider_id = "mock"

    _WORDS = (
        "policy debate evidence readers argue markets growth cities public "
        "support reform courts voters taxes wages schools housing climate "
        "data costs benefits rights states history experts research local "
        "national budget jobs trade media trust power change record study"
    ).split()

    def __init__(
        self,
        fixtures_dir: str | Path | None = None,
        seed: int = 0,
        embedding_dim: int = 64,
    ) -> None:
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.seed = seed
        self.embedding_dim = embedding_dim
        self.requests: list[CompletionRequest] = []

    # -- completion ---------------------------------------------------------

    def complete_text(self, request: CompletionRequest) -> str:
        self.requests.append(request)
        fixture = self._load_fixture(request)
        if fixture is not None:
            return fixture
        return self._synthetic_text(request)

    def fixture_name(self, request: CompletionRequest) -> str:
        key = request.fixture_key or _short_digest(request.prompt)
        if request.nonce:
            key = f"{key}__n{request.nonce}"
        return f"{request.template_id.value}__{key}.json"

    def _load_fixture(self, request: CompletionRequest) -> str | None:
        if self.fixtures_dir is None:
            return None
        path = self.fixtures_dir / self.fixture_name(request)
        if not path.exists():
            return None
        payload = json.loads(path.read_text(encoding="utf-8"))
        return payload["text"]

    def _synthetic_text(self, request: CompletionRequest) -> str:
        material = (
            f"{self.seed}|{request.template_id.value}|{request.nonce}|{request.prompt}"
        )
        digest = hashlib.sha256(material.encode("utf-8")).digest()
        words = [self._WORDS[b % len(self._WORDS)] for b in digest[:18]]
        sentences = []
        for i in range(0, len(words), 6):
            chunk = words[i : i + 6]
            sentences.append(chunk[0].capitalize() + " " + " ".join(chunk[1:]) + ".")
        return " ".join(sentences)

    # -- embedding ----------------------------------------------------------

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._embed_one(text) for text in texts]

    def _embed_one(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValueError("cannot embed empty text")
        vec = np.zeros(self.embedding_dim, dtype=np.float64)
        for token, count in Counter(text.lower().split()).items():
            token_digest = hashlib.sha256(
                f"{self.seed}|embed|{token}".encode("utf-8")
            ).digest()
            rng = np.random.RandomState(
                int.from_bytes(token_digest[:4], "little")
            )
            vec += count * rng.standard_normal(self.embedding_dim)
        return vec


class OpenAICompatProvider:
    """Thin client for an OpenAI-compatible HTTP endpoint.

    Only used when GATEWAY_PROVIDER points at a real deployment; all tests run
    against the mock. Transient HTTP failures surface as retryable errors.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str = "",
        model: str = "gpt-3.5-turbo",
        embedding_model: str = "text-embedding-ada-002",
        embedding_dim: int = 1536,
        timeout_s: float = 60.0,
    ) -> None:
        self.provider_id = f"openai-compat:{model}"
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.embedding_model = embedding_model
        self.embedding_dim = embedding_dim
        self.timeout_s = timeout_s

    def _post(self, path: str, payload: dict) -> dict:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = httpx.post(
                f"{self.base_url}{path}",
                json=payload,
                headers=headers,
                timeout=self.timeout_s,
            )
        except httpx.TimeoutException as exc:
            raise Timeout(f"provider timed out after {self.timeout_s}s") from exc
        except httpx.HTTPError as exc:
            raise TransientProviderError(str(exc)) from exc
        if response.status_code in (429, 500, 502, 503, 504):
            raise TransientProviderError(f"HTTP {response.status_code}")
        if response.status_code == 400 and b"content" in response.content:
            raise ContentRefused(response.text)
        if response.status_code >= 400:
            raise ProviderUnavailable(f"HTTP {response.status_code}: {response.text}")
        return response.json()

    def complete_text(self, request: CompletionRequest) -> str:
        data = self._post(
            "/chat/completions",
            {
                "model": self.model,
                "messages": [{"role": "user", "content": request.prompt}],
                "max_tokens": request.params.max_tokens,
                "temperature": request.params.temperature,
            },
        )
        return data["choices"][0]["message"]["content"]

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            return []
        data = self._post(
            "/embeddings", {"model": self.embedding_model, "input": list(texts)}
        )
        return [np.asarray(item["embedding"], dtype=np.float64) for item in data["data"]]


class Gateway:
    """Renders templates and talks to the configured provider with retries."""

    def __init__(
        self,
        provider: CompletionProvider,
        embedder: EmbeddingProvider | None = None,
        retry: RetryPolicy = RetryPolicy(),
        templates: dict[TemplateId, PromptTemplate] | None = None,
    ) -> None:
        self.provider = provider
        self.embedder = embedder if embedder is not None else provider  # type: ignore[assignment]
        self.retry = retry
        self.templates = templates if templates is not None else TEMPLATES

    def render(self, template_id: TemplateId, bindings: dict[str, str]) -> str:
        return self.templates[template_id].render(bindings)

    def complete(self, request: CompletionRequest) -> CompletionResult:
        delays = self.retry.delays()
        last_error: Exception | None = None
        for attempt in range(self.retry.attempts):
            start = time.monotonic()
            try:
                text = self.provider.complete_text(request)
                if not text or not text.strip():
                    raise TransientProviderError("provider returned empty text")
                return CompletionResult(
                    text=text,
                    provider_id=self.provider.provider_id,
                    latency_s=time.monotonic() - start,
                )
            except (ContentRefused, MissingPlaceholder):
                raise
            except (TransientProviderError, Timeout) as exc:
                last_error = exc
                if attempt < len(delays):
                    self.retry.sleep(delays[attempt])
        if isinstance(last_error, Timeout):
            raise last_error
        raise ProviderUnavailable(
            f"provider failed after {self.retry.attempts} attempts: {last_error}"
        )

    def complete_template(
        self,
        template_id: TemplateId,
        bindings: dict[str, str],
        fixture_key: str | None = None,
        nonce: int = 0,
        params: GenerationParams | None = None,
    ) -> CompletionResult:
        prompt = self.render(template_id, bindings)
        request = CompletionRequest(
            template_id=template_id,
            prompt=prompt,
            params=params if params is not None else DEFAULT_PARAMS[template_id],
            fixture_key=fixture_key,
            nonce=nonce,
        )
        return self.complete(request)

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            return []
        for text in texts:
            if not text or not text.strip():
                raise ValueError("cannot embed empty text")
        try:
            vectors = self.embedder.embed_texts(texts)
        except (TransientProviderError, Timeout) as exc:
            raise ProviderUnavailable(f"embedding failed: {exc}") from exc
        if len(vectors) != len(texts):
            raise ProviderUnavailable(
                f"embedder returned {len(vectors)} vectors for {len(texts)} texts"
            )
        for vec in vectors:
            if not np.all(np.isfinite(vec)):
                raise ProviderUnavailable("embedder returned non-finite components")
        return vectors


def gateway_from_env(env: dict[str, str] | None = None) -> Gateway:
    """Build a gateway from GATEWAY_* environment variables.

    GATEWAY_PROVIDER=mock (default) uses the offline provider, with optional
    GATEWAY_FIXTURES_DIR and GATEWAY_SEED. Any other value is treated as an
    OpenAI-compatible deployment at GATEWAY_BASE_URL with GATEWAY_API_KEY.
    """
    env = env if env is not None else dict(os.environ)
    kind = env.get("GATEWAY_PROVIDER", "mock")
    if kind == "mock":
        provider = MockProvider(
            fixtures_dir=env.get("GATEWAY_FIXTURES_DIR"),
            seed=int(env.get("GATEWAY_SEED", "0")),
        )
        return Gateway(provider)
    provider = OpenAICompatProvider(
        base_url=env.get("GATEWAY_BASE_URL", "https://api.openai.com/v1"),
        api_key=env.get("GATEWAY_API_KEY", ""),
        model=env.get("GATEWAY_MODEL", "gpt-3.5-turbo"),
    )
    return Gateway(provider)

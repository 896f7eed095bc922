// Typed client for the counterpoint HTTP service. Every feature in the UI
// talks to the backend through this module; nothing here invents data the
// server did not send.

export interface SpanDto {
  start: number;
  end: number;
}

export interface DocumentDto {
  doc_id: string;
  title: string;
  body: string;
  lean: string;
  source_url: string | null;
}

export interface ClaimDto {
  claim_id: string;
  claim_text: string;
  span: SpanDto;
  match_kind: string;
  match_score: number;
}

export interface CounterDto {
  claim_id: string;
  summary: string;
  full_text: string;
  provenance: string;
}

export interface AnnotationsDto {
  schema_version: number;
  document: DocumentDto;
  claims: ClaimDto[];
  counters: CounterDto[];
  metadata: {
    extracted: number;
    retained: number;
    unmatched: string[];
    overlapping: string[];
  };
}

export interface SnippetDto {
  title: string;
  url: string;
  snippet: string;
  rank: number;
}

export interface ContextDto {
  query_title: string;
  snippets: SnippetDto[];
  summary_text: string;
  generated_at: number;
  article_only: boolean;
}

export interface QaTurnDto {
  role: string;
  text: string;
  cited_chunks: number[];
  timestamp: number;
}

export interface ConversationDto {
  conversation_id: string;
  doc_id: string;
  turns: QaTurnDto[];
}

export interface DebateTurnDto {
  role: string;
  text: string;
  timestamp: number;
  feedback: string | null;
  regeneration_count: number;
  previous_texts: string[];
}

export interface DebateDto {
  session_id: string;
  doc_id: string;
  status: string;
  opening_argument: string;
  max_regens: number;
  turns: DebateTurnDto[];
}

export interface ExplanationDto {
  selected_text: string;
  span: SpanDto;
  mode: "definition" | "context";
  explanation: string;
}

export interface EventItemDto {
  feature: string;
  kind: "enter" | "exit";
  timestamp_ms: number;
}

export interface AnalyticsDto {
  session_id: string;
  seconds: Record<string, number>;
  fractions: Record<string, number>;
  session_duration_s: number;
}

/** Marks an annotations request answered with 202: keep polling. */
export const PENDING: unique symbol = Symbol("pending");

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async upload(
    title: string,
    body: string,
    lean = "unknown",
  ): Promise<{ doc_id: string; status: string }> {
    const res = await this.send("POST", "/documents", { title, body, lean });
    return this.decode(res);
  }

  async annotations(docId: string): Promise<AnnotationsDto | typeof PENDING> {
    const res = await this.send("GET", `/documents/${docId}/annotations`);
    if (res.status === 202) return PENDING;
    return this.decode(res);
  }

  async context(docId: string): Promise<ContextDto> {
    const res = await this.send("POST", `/documents/${docId}/context`);
    return this.decode(res);
  }

  async qa(
    docId: string,
    question: string,
    conversationId?: string,
  ): Promise<ConversationDto> {
    const res = await this.send("POST", `/documents/${docId}/qa`, {
      question,
      conversation_id: conversationId ?? null,
    });
    return this.decode(res);
  }

  async debate(
    docId: string,
    message: string,
    sessionId?: string,
  ): Promise<DebateDto> {
    const res = await this.send("POST", `/documents/${docId}/debate`, {
      message,
      session_id: sessionId ?? null,
    });
    return this.decode(res);
  }

  async feedback(
    sessionId: string,
    turnIndex: number,
    thumbs: "up" | "down",
  ): Promise<DebateDto> {
    const res = await this.send(
      "POST",
      `/debate/${sessionId}/turns/${turnIndex}/feedback`,
      { thumbs },
    );
    return this.decode(res);
  }

  async explain(docId: string, span: SpanDto): Promise<ExplanationDto> {
    const res = await this.send("POST", "/selections/explain", {
      doc_id: docId,
      start: span.start,
      end: span.end,
    });
    return this.decode(res);
  }

  async postEvents(sessionId: string, events: EventItemDto[]): Promise<void> {
    const res = await this.send(
      "POST",
      `/sessions/${sessionId}/events`,
      events,
    );
    await this.decode(res);
  }

  async analytics(sessionId: string): Promise<AnalyticsDto> {
    const res = await this.send("GET", `/sessions/${sessionId}/analytics`);
    return this.decode(res);
  }

  private send(method: string, path: string, body?: unknown): Promise<Response> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    return this.fetchFn(this.baseUrl + path, init);
  }

  private async decode<T>(res: Response): Promise<T> {
    if (res.ok) {
      return res.status === 204 ? (undefined as T) : ((await res.json()) as T);
    }
    let code = "HttpError";
    let message = `HTTP ${res.status}`;
    try {
      const payload = (await res.json()) as { code?: string; message?: string };
      if (payload.code) code = payload.code;
      if (payload.message) message = payload.message;
    } catch {
      // non-JSON error body: keep the fallback code and message
    }
    throw new ApiError(res.status, code, message);
  }
}

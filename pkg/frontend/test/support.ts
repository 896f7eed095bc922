// Shared test scaffolding: a route-matching fake fetch and fixture builders.

import type { AnnotationsDto, ClaimDto, CounterDto, FetchLike } from "../src/api.js";
import { codePointIndex, codePointLength } from "../src/offsets.js";

export interface RecordedCall {
  method: string;
  url: string;
  body: unknown;
}

export interface Route {
  method: string;
  path: string | RegExp;
  handler: (body: unknown, url: string) => { status?: number; json?: unknown };
}

export function fakeFetch(routes: Route[], calls: RecordedCall[] = []): FetchLike {
  return async (url, init) => {
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? JSON.parse(init.body) : undefined;
    calls.push({ method, url, body });
    for (const route of routes) {
      const hit =
        route.method === method &&
        (typeof route.path === "string" ? route.path === url : route.path.test(url));
      if (!hit) continue;
      const { status = 200, json } = route.handler(body, url);
      if (status === 204) return new Response(null, { status });
      return new Response(JSON.stringify(json ?? {}), {
        status,
        headers: { "content-type": "application/json" },
      });
    }
    throw new Error(`no fake route for ${method} ${url}`);
  };
}

export function errorBody(code: string, message: string): { code: string; message: string } {
  return { code, message };
}

export function claimAt(body: string, phrase: string, id: string): ClaimDto {
  const at = body.indexOf(phrase);
  if (at < 0) throw new Error(`fixture phrase not in body: ${phrase}`);
  const start = codePointIndex(body, at);
  return {
    claim_id: id,
    claim_text: phrase,
    span: { start, end: start + codePointLength(phrase) },
    match_kind: "exact",
    match_score: 1.0,
  };
}

export function counterFor(claim: ClaimDto): CounterDto {
  return {
    claim_id: claim.claim_id,
    summary: `Counter to ${claim.claim_id}.`,
    full_text: `Counter to ${claim.claim_id}. The longer form cites two studies and a caveat.`,
    provenance: "generated",
  };
}

export function makeAnnotations(
  title: string,
  body: string,
  phrases: string[],
): AnnotationsDto {
  const claims = phrases.map((phrase, i) => claimAt(body, phrase, `c${i}`));
  return {
    schema_version: 1,
    document: {
      doc_id: "doc-test",
      title,
      body,
      lean: "unknown",
      source_url: null,
    },
    claims,
    counters: claims.map(counterFor),
    metadata: {
      extracted: claims.length,
      retained: claims.length,
      unmatched: [],
      overlapping: [],
    },
  };
}

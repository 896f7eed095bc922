// Highlight geometry. Claim spans arrive from the server and stay
// authoritative: this module converts and slices, it never searches the
// article text for claims itself.

import type { ClaimDto } from "./api.js";
import { toUtf16Range } from "./offsets.js";

export interface HighlightRange {
  claimId: string;
  start: number; // UTF-16 units into the body
  end: number;
}

export function highlightRanges(
  body: string,
  claims: readonly ClaimDto[],
): HighlightRange[] {
  const ranges = claims.map((claim) => {
    const { start, end } = toUtf16Range(body, claim.span);
    return { claimId: claim.claim_id, start, end };
  });
  ranges.sort((a, b) => a.start - b.start || a.end - b.end);
  for (let i = 1; i < ranges.length; i++) {
    const prev = ranges[i - 1]!;
    const next = ranges[i]!;
    if (next.start < prev.end) {
      throw new Error(
        `server sent overlapping claim spans: ${prev.claimId} and ${next.claimId}`,
      );
    }
  }
  return ranges;
}

export interface Segment {
  text: string;
  claimId: string | null;
}

/** Split the body into plain and highlighted runs, in reading order. */
export function segmentBody(
  body: string,
  ranges: readonly HighlightRange[],
): Segment[] {
  const segments: Segment[] = [];
  let pos = 0;
  for (const range of ranges) {
    if (range.start > pos) {
      segments.push({ text: body.slice(pos, range.start), claimId: null });
    }
    segments.push({
      text: body.slice(range.start, range.end),
      claimId: range.claimId,
    });
    pos = range.end;
  }
  if (pos < body.length) {
    segments.push({ text: body.slice(pos), claimId: null });
  }
  return segments;
}

// Server spans are half-open [start, end) ranges counted in Unicode code
// points; DOM strings and selections count UTF-16 units. These helpers
// convert between the two index spaces and refuse any index that would
// split a surrogate pair.

import type { SpanDto } from "./api.js";

export interface Utf16Range {
  start: number;
  end: number;
}

export function utf16Index(text: string, cpIndex: number): number {
  if (cpIndex < 0) {
    throw new RangeError(`negative code point index ${cpIndex}`);
  }
  let units = 0;
  for (let seen = 0; seen < cpIndex; seen++) {
    if (units >= text.length) {
      throw new RangeError(`code point index ${cpIndex} is past the end of the text`);
    }
    units += text.codePointAt(units)! > 0xffff ? 2 : 1;
  }
  return units;
}

export function codePointIndex(text: string, utf16Idx: number): number {
  if (utf16Idx < 0 || utf16Idx > text.length) {
    throw new RangeError(`UTF-16 index ${utf16Idx} is out of range`);
  }
  let units = 0;
  let points = 0;
  while (units < utf16Idx) {
    units += text.codePointAt(units)! > 0xffff ? 2 : 1;
    points += 1;
  }
  if (units !== utf16Idx) {
    throw new RangeError(`UTF-16 index ${utf16Idx} splits a surrogate pair`);
  }
  return points;
}

export function codePointLength(text: string): number {
  let points = 0;
  for (let units = 0; units < text.length; points++) {
    units += text.codePointAt(units)! > 0xffff ? 2 : 1;
  }
  return points;
}

export function toUtf16Range(text: string, span: SpanDto): Utf16Range {
  if (span.end < span.start) {
    throw new RangeError(`span end ${span.end} precedes start ${span.start}`);
  }
  const start = utf16Index(text, span.start);
  const end = utf16Index(text, span.end);
  return { start, end };
}

export function toCodePointSpan(text: string, range: Utf16Range): SpanDto {
  if (range.end < range.start) {
    throw new RangeError(`range end ${range.end} precedes start ${range.start}`);
  }
  return {
    start: codePointIndex(text, range.start),
    end: codePointIndex(text, range.end),
  };
}

/** The text a server span refers to, sliced the way the server slices it. */
export function sliceSpan(text: string, span: SpanDto): string {
  const range = toUtf16Range(text, span);
  return text.slice(range.start, range.end);
}

// @vitest-environment happy-dom

import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, type ExplanationDto } from "../src/api.js";
import {
  activePopover,
  closePopover,
  openPopover,
  selectionOffsets,
} from "../src/popover.js";

function explanation(mode: "definition" | "context", text: string): ExplanationDto {
  return { selected_text: "word", span: { start: 0, end: 4 }, mode, explanation: text };
}

function openWith(result: Promise<ExplanationDto>): HTMLElement {
  return openPopover({
    container: document.body,
    selectedText: "word",
    position: { left: 10, top: 20 },
    explain: () => result,
  });
}

afterEach(() => {
  closePopover();
  document.body.innerHTML = "";
});

describe("openPopover", () => {
  it("labels a one-word definition response 'Definition'", async () => {
    const pop = openWith(Promise.resolve(explanation("definition", "A word meaning.")));
    await vi.waitFor(() => {
      expect(pop.querySelector(".popover-label")!.textContent).toBe("Definition");
    });
    expect(pop.querySelector(".popover-body")!.textContent).toBe("A word meaning.");
  });

  it("labels a longer selection 'More context'", async () => {
    const pop = openWith(Promise.resolve(explanation("context", "Background here.")));
    await vi.waitFor(() => {
      expect(pop.querySelector(".popover-label")!.textContent).toBe("More context");
    });
  });

  it("keeps exactly one popover at a time", () => {
    const first = openWith(new Promise<ExplanationDto>(() => {}));
    const second = openWith(new Promise<ExplanationDto>(() => {}));
    expect(first.isConnected).toBe(false);
    expect(second.isConnected).toBe(true);
    expect(activePopover()).toBe(second);
    expect(document.querySelectorAll(".selection-popover")).toHaveLength(1);
  });

  it("ignores a late response for a superseded popover", async () => {
    let resolveFirst!: (value: ExplanationDto) => void;
    const first = openWith(new Promise<ExplanationDto>((r) => (resolveFirst = r)));
    const second = openWith(Promise.resolve(explanation("context", "second")));
    await vi.waitFor(() => {
      expect(second.querySelector(".popover-body")!.textContent).toBe("second");
    });
    resolveFirst(explanation("definition", "first, too late"));
    await new Promise((r) => setTimeout(r, 0));
    expect(first.querySelector(".popover-label")!.textContent).toBe("Explaining");
    expect(second.querySelector(".popover-body")!.textContent).toBe("second");
  });

  it("shows the structured error code on failure", async () => {
    const pop = openWith(Promise.reject(new ApiError(422, "SpanOutOfRange", "bad span")));
    await vi.waitFor(() => {
      expect(pop.querySelector(".popover-label")!.textContent).toBe("Error");
    });
    expect(pop.querySelector(".popover-body")!.textContent).toBe(
      "SpanOutOfRange: bad span",
    );
  });

  it("closes from the close button", () => {
    const pop = openWith(new Promise<ExplanationDto>(() => {}));
    (pop.querySelector(".popover-close") as HTMLButtonElement).click();
    expect(activePopover()).toBeNull();
    expect(pop.isConnected).toBe(false);
  });
});

describe("selectionOffsets", () => {
  function bodyWithMark(): HTMLElement {
    const host = document.createElement("div");
    host.innerHTML = "ab<mark>cd</mark>ef";
    document.body.appendChild(host);
    return host;
  }

  it("counts text across element boundaries", () => {
    const host = bodyWithMark();
    const first = host.firstChild!; // "ab"
    const last = host.lastChild!; // "ef"
    expect(
      selectionOffsets(host, {
        startContainer: first,
        startOffset: 1,
        endContainer: last,
        endOffset: 1,
      }),
    ).toEqual({ start: 1, end: 5 });
  });

  it("normalizes a backwards selection", () => {
    const host = bodyWithMark();
    const markText = host.querySelector("mark")!.firstChild!;
    expect(
      selectionOffsets(host, {
        startContainer: host.lastChild!,
        startOffset: 2,
        endContainer: markText,
        endOffset: 0,
      }),
    ).toEqual({ start: 2, end: 6 });
  });

  it("returns null for a collapsed range", () => {
    const host = bodyWithMark();
    const first = host.firstChild!;
    expect(
      selectionOffsets(host, {
        startContainer: first,
        startOffset: 1,
        endContainer: first,
        endOffset: 1,
      }),
    ).toBeNull();
  });

  it("returns null when the selection leaves the container", () => {
    const host = bodyWithMark();
    const outside = document.createElement("p");
    outside.textContent = "outside";
    document.body.appendChild(outside);
    expect(
      selectionOffsets(host, {
        startContainer: host.firstChild!,
        startOffset: 0,
        endContainer: outside.firstChild!,
        endOffset: 2,
      }),
    ).toBeNull();
  });

  it("treats element-anchored offsets as child positions", () => {
    const host = bodyWithMark();
    expect(
      selectionOffsets(host, {
        startContainer: host,
        startOffset: 0,
        endContainer: host,
        endOffset: 2, // after "ab" and the mark
      }),
    ).toEqual({ start: 0, end: 4 });
  });
});

// Selection popover. At most one exists at a time: opening a new one tears
// down the old. The header label follows the server's decision, a single
// selected word comes back as a definition, anything longer as context.

import { ApiError, type ExplanationDto } from "./api.js";

const TEXT_NODE = 3;

let active: HTMLElement | null = null;

export function activePopover(): HTMLElement | null {
  return active;
}

export function closePopover(): void {
  if (active !== null) {
    active.remove();
    active = null;
  }
}

export interface SelectionLike {
  startContainer: Node;
  startOffset: number;
  endContainer: Node;
  endOffset: number;
}

/**
 * Map a DOM selection range to UTF-16 offsets within the container's full
 * text, counting text nodes in document order. Returns null when the range
 * is collapsed or falls outside the container.
 */
export function selectionOffsets(
  container: HTMLElement,
  range: SelectionLike,
): { start: number; end: number } | null {
  const start = offsetWithin(container, range.startContainer, range.startOffset);
  const end = offsetWithin(container, range.endContainer, range.endOffset);
  if (start === null || end === null || start === end) return null;
  return start <= end ? { start, end } : { start: end, end: start };
}

function offsetWithin(
  container: HTMLElement,
  node: Node,
  offset: number,
): number | null {
  let total = 0;
  let found: number | null = null;
  const visit = (current: Node): void => {
    if (found !== null) return;
    if (current.nodeType === TEXT_NODE) {
      if (current === node) {
        found = total + Math.min(offset, (current.nodeValue ?? "").length);
        return;
      }
      total += (current.nodeValue ?? "").length;
      return;
    }
    if (current === node) {
      // selection anchored on the element itself: offset counts child nodes
      let index = 0;
      for (const child of Array.from(current.childNodes)) {
        if (index >= offset) break;
        total += textLength(child);
        index += 1;
      }
      found = total;
      return;
    }
    for (const child of Array.from(current.childNodes)) visit(child);
  };
  visit(container);
  return found;
}

function textLength(node: Node): number {
  if (node.nodeType === TEXT_NODE) return (node.nodeValue ?? "").length;
  let total = 0;
  for (const child of Array.from(node.childNodes)) total += textLength(child);
  return total;
}

export interface PopoverRequest {
  container: HTMLElement;
  selectedText: string;
  position: { left: number; top: number };
  explain: () => Promise<ExplanationDto>;
}

export function openPopover(request: PopoverRequest): HTMLElement {
  closePopover();
  const doc = request.container.ownerDocument;

  const pop = doc.createElement("div");
  pop.className = "selection-popover";
  Object.assign(pop.style, {
    position: "absolute",
    left: `${request.position.left}px`,
    top: `${request.position.top}px`,
  });

  const close = doc.createElement("button");
  close.className = "popover-close";
  close.type = "button";
  close.textContent = "×";
  close.addEventListener("click", closePopover);

  const label = doc.createElement("h4");
  label.className = "popover-label";
  label.textContent = "Explaining";

  const quoted = doc.createElement("p");
  quoted.className = "popover-selection";
  quoted.textContent = request.selectedText;

  const body = doc.createElement("p");
  body.className = "popover-body";
  body.textContent = "Loading";

  pop.append(close, label, quoted, body);
  request.container.appendChild(pop);
  active = pop;

  void request.explain().then(
    (explanation) => {
      if (active !== pop) return; // superseded by a newer selection
      label.textContent =
        explanation.mode === "definition" ? "Definition" : "More context";
      body.textContent = explanation.explanation;
    },
    (err: unknown) => {
      if (active !== pop) return;
      label.textContent = "Error";
      body.textContent =
        err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    },
  );
  return pop;
}

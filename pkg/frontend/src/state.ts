// Single source of UI truth. Renderers keep this in step with the DOM so
// tests and instrumentation can ask "what is on screen" without reparsing it.

import type { DocumentDto, SpanDto } from "./api.js";
import type { HighlightRange } from "./highlights.js";

export type Panel = "context" | "qa" | "debateme";

export interface ViewState {
  doc: DocumentDto | null;
  highlights: HighlightRange[]; // derived from server spans, nothing else
  expanded: Set<string>; // claim ids whose counter shows full text
  openPanels: Set<Panel>;
  pendingSelection: SpanDto | null; // code points, awaiting explanation
}

export function initialViewState(): ViewState {
  return {
    doc: null,
    highlights: [],
    expanded: new Set(),
    openPanels: new Set(),
    pendingSelection: null,
  };
}

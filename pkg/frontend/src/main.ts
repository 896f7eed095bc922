// SPA entry point: upload an article, poll for annotations, then wire the
// reader, the interaction surfaces, and the session instrumentation.

import { ApiClient, ApiError, PENDING, type AnnotationsDto } from "./api.js";
import { DebatePanel, QaPanel } from "./chat.js";
import { ContextPanel } from "./context.js";
import { SessionRecorder, bindFocusTracking } from "./events.js";
import { toCodePointSpan } from "./offsets.js";
import { closePopover, openPopover, selectionOffsets } from "./popover.js";
import { initialViewState, type Panel } from "./state.js";
import { renderPending, renderReader } from "./reader.js";

const api = new ApiClient("");
const sessionId = crypto.randomUUID();
const recorder = new SessionRecorder((events) => api.postEvents(sessionId, events));
const state = initialViewState();

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing #${id}`);
  return el;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function pollAnnotations(docId: string): Promise<AnnotationsDto> {
  for (;;) {
    const result = await api.annotations(docId);
    if (result !== PENDING) return result;
    await sleep(800);
  }
}

function wireSurfaces(docId: string): void {
  const readerRoot = byId("reader");
  const articleBody = readerRoot.querySelector<HTMLElement>(".article-body");
  const countersPane = readerRoot.querySelector<HTMLElement>(".counters-pane");
  if (articleBody === null || countersPane === null) return;

  const panels: Record<Panel, HTMLElement> = {
    context: byId("context-panel"),
    qa: byId("qa-panel"),
    debateme: byId("debate-panel"),
  };
  const contextPanel = new ContextPanel(panels.context, api, docId);
  new QaPanel(panels.qa, api, docId);
  new DebatePanel(panels.debateme, api, docId);

  const togglePanel = (panel: Panel): void => {
    const el = panels[panel];
    el.hidden = !el.hidden;
    if (el.hidden) {
      state.openPanels.delete(panel);
      recorder.exit(panel);
    } else {
      state.openPanels.add(panel);
      recorder.enter(panel);
      el.focus();
    }
  };

  byId("toolbar").hidden = false;
  byId("context-btn").addEventListener("click", () => {
    togglePanel("context");
    void contextPanel.open();
  });
  byId("qa-btn").addEventListener("click", () => togglePanel("qa"));
  byId("debate-btn").addEventListener("click", () => togglePanel("debateme"));

  // reading time: the article pane counts as "article", a focused highlight
  // as "claims", the counters pane as "counters"
  articleBody.addEventListener("focusin", (event) => {
    const target = event.target as HTMLElement;
    const onMark = typeof target.matches === "function" &&
      target.matches("mark.claim-highlight");
    recorder.enter(onMark ? "claims" : "article");
  });
  bindFocusTracking(recorder, [
    { element: countersPane, feature: "counters" },
    { element: panels.qa, feature: "qa" },
    { element: panels.debateme, feature: "debateme" },
    { element: panels.context, feature: "context" },
  ]);

  articleBody.addEventListener("mouseup", () => {
    const selection = window.getSelection();
    if (!selection || selection.isCollapsed || selection.rangeCount === 0) {
      closePopover();
      state.pendingSelection = null;
      return;
    }
    const range = selection.getRangeAt(0);
    const offsets = selectionOffsets(articleBody, range);
    if (offsets === null || state.doc === null) return;
    const span = toCodePointSpan(state.doc.body, offsets);
    state.pendingSelection = span;
    const rect = range.getBoundingClientRect();
    recorder.enter("highlight");
    openPopover({
      container: document.body,
      selectedText: selection.toString(),
      position: {
        left: rect.left + window.scrollX,
        top: rect.bottom + window.scrollY + 8,
      },
      explain: () => api.explain(docId, span),
    });
  });
}

async function boot(title: string, body: string, lean: string): Promise<void> {
  const readerRoot = byId("reader");
  renderPending(readerRoot);
  recorder.enter("article");
  try {
    const { doc_id } = await api.upload(title, body, lean);
    const annotated = await pollAnnotations(doc_id);
    renderReader(readerRoot, annotated, state);
    wireSurfaces(doc_id);
  } catch (err: unknown) {
    readerRoot.textContent = "";
    const note = document.createElement("p");
    note.className = "reader-error";
    note.textContent =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    readerRoot.appendChild(note);
  }
}

function init(): void {
  const form = byId("upload-form") as HTMLFormElement;
  const title = byId("title-input") as HTMLInputElement;
  const body = byId("body-input") as HTMLTextAreaElement;
  const lean = byId("lean-input") as HTMLSelectElement;

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!title.value.trim() || !body.value.trim()) return;
    form.hidden = true;
    void boot(title.value.trim(), body.value, lean.value);
  });

  setInterval(() => void recorder.flush(), 3000);
  window.addEventListener("beforeunload", () => {
    recorder.closeOpen();
    void recorder.flush();
  });
}

init();

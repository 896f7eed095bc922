// Two-pane reader: the article on the left with claims marked in yellow,
// counter-argument cards on the right. Element creation goes through the
// root's ownerDocument so the renderer works in any DOM implementation.

import type { AnnotationsDto, CounterDto } from "./api.js";
import { highlightRanges, segmentBody } from "./highlights.js";
import type { ViewState } from "./state.js";

export function renderPending(root: HTMLElement): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const note = doc.createElement("p");
  note.className = "reader-pending";
  note.textContent = "Analyzing article, highlights will appear shortly.";
  root.appendChild(note);
}

export function renderReader(
  root: HTMLElement,
  annotated: AnnotationsDto,
  state: ViewState,
): void {
  const doc = root.ownerDocument;
  state.doc = annotated.document;
  state.highlights = highlightRanges(annotated.document.body, annotated.claims);

  root.textContent = "";

  const article = doc.createElement("section");
  article.className = "article-pane";
  const title = doc.createElement("h2");
  title.className = "article-title";
  title.textContent = annotated.document.title;
  const body = doc.createElement("div");
  body.className = "article-body";
  body.tabIndex = 0;
  for (const segment of segmentBody(annotated.document.body, state.highlights)) {
    if (segment.claimId === null) {
      body.appendChild(doc.createTextNode(segment.text));
    } else {
      const mark = doc.createElement("mark");
      mark.className = "claim-highlight";
      mark.dataset.claimId = segment.claimId;
      mark.style.backgroundColor = "yellow";
      mark.tabIndex = 0;
      mark.textContent = segment.text;
      body.appendChild(mark);
    }
  }
  article.append(title, body);

  const counters = doc.createElement("aside");
  counters.className = "counters-pane";
  counters.tabIndex = 0;
  for (const counter of annotated.counters) {
    counters.appendChild(counterCard(doc, counter, state));
  }

  root.append(article, counters);
}

function counterCard(
  doc: Document,
  counter: CounterDto,
  state: ViewState,
): HTMLElement {
  const card = doc.createElement("article");
  card.className = "counter-card";
  card.dataset.claimId = counter.claim_id;

  const summary = doc.createElement("p");
  summary.className = "counter-summary";
  summary.textContent = counter.summary;

  const full = doc.createElement("p");
  full.className = "counter-full";
  full.textContent = counter.full_text;
  full.hidden = true;

  const toggle = doc.createElement("button");
  toggle.className = "expand-btn";
  toggle.type = "button";
  toggle.textContent = "Expand";
  toggle.addEventListener("click", () => {
    const expand = full.hidden;
    full.hidden = !expand;
    toggle.textContent = expand ? "Collapse" : "Expand";
    if (expand) {
      state.expanded.add(counter.claim_id);
    } else {
      state.expanded.delete(counter.claim_id);
    }
  });

  card.append(summary, toggle, full);
  return card;
}

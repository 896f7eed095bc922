// "Get Additional Context" panel. The summary is fetched once per document
// and cached; every later click re-renders the same result. A failed fetch
// clears the cache so the button can retry.

import { ApiError, type ApiClient, type ContextDto } from "./api.js";

export class ContextPanel {
  private cached: Promise<ContextDto> | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly docId: string,
  ) {}

  open(): Promise<void> {
    if (this.cached === null) {
      const fetched = this.api.context(this.docId);
      fetched.catch(() => {
        if (this.cached === fetched) this.cached = null;
      });
      this.cached = fetched;
    }
    return this.cached.then(
      (ctx) => this.render(ctx),
      (err: unknown) => this.renderError(err),
    );
  }

  private render(ctx: ContextDto): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";

    const summary = doc.createElement("p");
    summary.className = "context-summary";
    summary.textContent = ctx.summary_text;
    this.root.appendChild(summary);

    if (ctx.article_only) {
      const note = doc.createElement("p");
      note.className = "context-note";
      note.textContent = "No related coverage found; summary uses the article alone.";
      this.root.appendChild(note);
      return;
    }

    const list = doc.createElement("ul");
    list.className = "context-snippets";
    for (const snippet of ctx.snippets) {
      const item = doc.createElement("li");
      const link = doc.createElement("a");
      link.href = snippet.url;
      link.textContent = snippet.title;
      const text = doc.createElement("p");
      text.textContent = snippet.snippet;
      item.append(link, text);
      list.appendChild(item);
    }
    this.root.appendChild(list);
  }

  private renderError(err: unknown): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    const note = doc.createElement("p");
    note.className = "context-error";
    note.textContent =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.root.appendChild(note);
  }
}

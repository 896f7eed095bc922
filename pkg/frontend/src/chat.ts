// Q&A and DebateMe chat panels. Both re-render the full turn history the
// server returns after every call; the client never edits history locally.
// Thumbs down on a debate turn swaps the regenerated text in place and bumps
// the audit badge; a 409 from the feedback endpoint becomes a limit notice.

import {
  ApiError,
  type ApiClient,
  type ConversationDto,
  type DebateDto,
  type DebateTurnDto,
} from "./api.js";

function turnItem(doc: Document, role: string, text: string): HTMLElement {
  const item = doc.createElement("li");
  item.className = `chat-turn chat-${role}`;
  const body = doc.createElement("p");
  body.className = "chat-text";
  body.textContent = text;
  item.appendChild(body);
  return item;
}

function chatForm(
  doc: Document,
  placeholder: string,
  onSubmit: (message: string) => void,
): HTMLFormElement {
  const form = doc.createElement("form");
  form.className = "chat-form";
  const input = doc.createElement("input");
  input.type = "text";
  input.className = "chat-input";
  input.placeholder = placeholder;
  const send = doc.createElement("button");
  send.type = "submit";
  send.textContent = "Send";
  form.append(input, send);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const message = input.value.trim();
    if (!message) return;
    input.value = "";
    onSubmit(message);
  });
  return form;
}

export class QaPanel {
  private conversationId: string | null = null;
  private readonly log: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly docId: string,
  ) {
    const doc = root.ownerDocument;
    root.textContent = "";
    this.log = doc.createElement("ul");
    this.log.className = "chat-log qa-log";
    root.append(
      this.log,
      chatForm(doc, "Ask about the article", (q) => void this.ask(q)),
    );
  }

  async ask(question: string): Promise<void> {
    const convo = await this.api.qa(
      this.docId,
      question,
      this.conversationId ?? undefined,
    );
    this.conversationId = convo.conversation_id;
    this.render(convo);
  }

  private render(convo: ConversationDto): void {
    const doc = this.root.ownerDocument;
    this.log.textContent = "";
    for (const turn of convo.turns) {
      const item = turnItem(doc, turn.role, turn.text);
      if (turn.role === "bot" && turn.cited_chunks.length > 0) {
        const cites = doc.createElement("p");
        cites.className = "chat-cites";
        cites.textContent = `cites chunks ${turn.cited_chunks.join(", ")}`;
        item.appendChild(cites);
      }
      this.log.appendChild(item);
    }
  }
}

export class DebatePanel {
  private sessionId: string | null = null;
  private readonly log: HTMLElement;
  private readonly noticeSlot: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly docId: string,
  ) {
    const doc = root.ownerDocument;
    root.textContent = "";
    this.log = doc.createElement("ul");
    this.log.className = "chat-log debate-log";
    this.noticeSlot = doc.createElement("div");
    this.noticeSlot.className = "debate-notices";
    root.append(
      this.log,
      this.noticeSlot,
      chatForm(doc, "State your side, then argue it", (m) => void this.send(m)),
    );
  }

  async send(message: string): Promise<void> {
    const session = await this.api.debate(
      this.docId,
      message,
      this.sessionId ?? undefined,
    );
    this.sessionId = session.session_id;
    this.render(session);
  }

  async thumbs(turnIndex: number, value: "up" | "down"): Promise<void> {
    if (this.sessionId === null) return;
    try {
      const session = await this.api.feedback(this.sessionId, turnIndex, value);
      this.render(session);
    } catch (err: unknown) {
      if (err instanceof ApiError && err.status === 409) {
        this.notice("regeneration limit reached");
        return;
      }
      throw err;
    }
  }

  private render(session: DebateDto): void {
    const doc = this.root.ownerDocument;
    this.noticeSlot.textContent = "";
    this.log.textContent = "";
    session.turns.forEach((turn, index) => {
      const item = turnItem(doc, turn.role, turn.text);
      if (turn.role === "bot") {
        item.appendChild(this.botControls(doc, turn, index));
      }
      this.log.appendChild(item);
    });
  }

  private botControls(
    doc: Document,
    turn: DebateTurnDto,
    index: number,
  ): HTMLElement {
    const controls = doc.createElement("div");
    controls.className = "turn-controls";

    const up = doc.createElement("button");
    up.type = "button";
    up.className = "thumbs-up";
    up.textContent = "👍";
    up.setAttribute("aria-label", "thumbs up");
    up.addEventListener("click", () => void this.thumbs(index, "up"));

    const down = doc.createElement("button");
    down.type = "button";
    down.className = "thumbs-down";
    down.textContent = "👎";
    down.setAttribute("aria-label", "thumbs down");
    down.addEventListener("click", () => void this.thumbs(index, "down"));

    controls.append(up, down);

    if (turn.regeneration_count > 0) {
      const badge = doc.createElement("span");
      badge.className = "regen-badge";
      badge.textContent = `regenerated ×${turn.regeneration_count}`;
      controls.appendChild(badge);
    }
    return controls;
  }

  private notice(text: string): void {
    const doc = this.root.ownerDocument;
    this.noticeSlot.textContent = "";
    const note = doc.createElement("p");
    note.className = "debate-notice";
    note.textContent = text;
    this.noticeSlot.appendChild(note);
  }
}

// @vitest-environment happy-dom

import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, type ConversationDto, type DebateDto } from "../src/api.js";
import { DebatePanel, QaPanel } from "../src/chat.js";
import { errorBody, fakeFetch, type RecordedCall, type Route } from "./support.js";

let root: HTMLElement;
let calls: RecordedCall[];

beforeEach(() => {
  document.body.innerHTML = "";
  root = document.createElement("section");
  document.body.appendChild(root);
  calls = [];
});

function qaResponse(turns: Array<[string, string, number[]]>): ConversationDto {
  return {
    conversation_id: "conv1",
    doc_id: "d1",
    turns: turns.map(([role, text, cited], i) => ({
      role,
      text,
      cited_chunks: cited,
      timestamp: 1000 + i,
    })),
  };
}

describe("QaPanel", () => {
  const firstTurns = qaResponse([
    ["user", "Why cut buses?", []],
    ["bot", "The article says ridership fell.", [0, 2]],
  ]);

  it("renders the full history the server returns", async () => {
    const api = new ApiClient(
      "",
      fakeFetch([{ method: "POST", path: "/documents/d1/qa", handler: () => ({ json: firstTurns }) }], calls),
    );
    const panel = new QaPanel(root, api, "d1");
    await panel.ask("Why cut buses?");

    const turns = root.querySelectorAll(".chat-turn");
    expect(turns).toHaveLength(2);
    expect(turns[0]!.className).toContain("chat-user");
    expect(turns[1]!.className).toContain("chat-bot");
    expect(turns[1]!.querySelector(".chat-cites")!.textContent).toBe("cites chunks 0, 2");
  });

  it("threads the conversation id into the second question", async () => {
    const second = qaResponse([
      ["user", "Why cut buses?", []],
      ["bot", "The article says ridership fell.", [0]],
      ["user", "Says who?", []],
      ["bot", "The levy audit.", [1]],
    ]);
    let asked = 0;
    const api = new ApiClient(
      "",
      fakeFetch(
        [
          {
            method: "POST",
            path: "/documents/d1/qa",
            handler: () => ({ json: asked++ === 0 ? firstTurns : second }),
          },
        ],
        calls,
      ),
    );
    const panel = new QaPanel(root, api, "d1");
    await panel.ask("Why cut buses?");
    await panel.ask("Says who?");

    expect(calls[0]!.body).toMatchObject({ conversation_id: null });
    expect(calls[1]!.body).toMatchObject({ conversation_id: "conv1" });
    expect(root.querySelectorAll(".chat-turn")).toHaveLength(4);
  });

  it("sends the typed question on form submit and clears the input", async () => {
    const api = new ApiClient(
      "",
      fakeFetch([{ method: "POST", path: "/documents/d1/qa", handler: () => ({ json: firstTurns }) }], calls),
    );
    new QaPanel(root, api, "d1");
    const input = root.querySelector(".chat-input") as HTMLInputElement;
    input.value = "Why cut buses?";
    root.querySelector("form")!.dispatchEvent(new Event("submit", { cancelable: true }));

    await vi.waitFor(() => expect(calls).toHaveLength(1));
    expect(calls[0]!.body).toMatchObject({ question: "Why cut buses?" });
    expect(input.value).toBe("");
  });

  it("ignores empty input", () => {
    const api = new ApiClient("", fakeFetch([], calls));
    new QaPanel(root, api, "d1");
    const input = root.querySelector(".chat-input") as HTMLInputElement;
    input.value = "   ";
    root.querySelector("form")!.dispatchEvent(new Event("submit", { cancelable: true }));
    expect(calls).toHaveLength(0);
  });
});

function debateSession(turns: Array<Partial<DebateDto["turns"][number]>>): DebateDto {
  return {
    session_id: "deb1",
    doc_id: "d1",
    status: "open",
    opening_argument: "pro",
    max_regens: 3,
    turns: turns.map((turn, i) => ({
      role: i % 2 === 0 ? "user" : "bot",
      text: `turn ${i}`,
      timestamp: 1000 + i,
      feedback: null,
      regeneration_count: 0,
      previous_texts: [],
      ...turn,
    })),
  };
}

describe("DebatePanel", () => {
  const opening = debateSession([
    { text: "I support the levy." },
    { text: "Consider the audit first." },
  ]);

  function debateRoutes(extra: Route[] = []): Route[] {
    return [
      { method: "POST", path: "/documents/d1/debate", handler: () => ({ json: opening }) },
      ...extra,
    ];
  }

  it("renders history with thumbs on bot turns only", async () => {
    const api = new ApiClient("", fakeFetch(debateRoutes(), calls));
    const panel = new DebatePanel(root, api, "d1");
    await panel.send("I support the levy.");

    const turns = root.querySelectorAll(".chat-turn");
    expect(turns).toHaveLength(2);
    expect(turns[0]!.querySelector(".thumbs-down")).toBeNull();
    expect(turns[1]!.querySelector(".thumbs-down")).not.toBeNull();
    expect(turns[1]!.querySelector(".thumbs-up")).not.toBeNull();
  });

  it("reuses the session id for the next message", async () => {
    const api = new ApiClient("", fakeFetch(debateRoutes(), calls));
    const panel = new DebatePanel(root, api, "d1");
    await panel.send("I support the levy.");
    await panel.send("Audits take years.");

    expect(calls[0]!.body).toMatchObject({ session_id: null });
    expect(calls[1]!.body).toMatchObject({ session_id: "deb1" });
  });

  it("swaps regenerated text in place and bumps the audit badge on thumbs down", async () => {
    const regenerated = debateSession([
      { text: "I support the levy." },
      {
        text: "A different tack: the audit found waste.",
        feedback: "down",
        regeneration_count: 1,
        previous_texts: ["Consider the audit first."],
      },
    ]);
    const api = new ApiClient(
      "",
      fakeFetch(
        debateRoutes([
          {
            method: "POST",
            path: "/debate/deb1/turns/1/feedback",
            handler: () => ({ json: regenerated }),
          },
        ]),
        calls,
      ),
    );
    const panel = new DebatePanel(root, api, "d1");
    await panel.send("I support the levy.");
    const before = root.querySelectorAll(".chat-turn")[1]!.textContent;

    await panel.thumbs(1, "down");

    const turns = root.querySelectorAll(".chat-turn");
    expect(turns).toHaveLength(2); // swapped in place, not appended
    expect(turns[1]!.querySelector(".chat-text")!.textContent).toBe(
      "A different tack: the audit found waste.",
    );
    expect(turns[1]!.textContent).not.toBe(before);
    expect(turns[1]!.querySelector(".regen-badge")!.textContent).toBe("regenerated ×1");
  });

  it("drives the same swap from a click on the thumbs-down button", async () => {
    const regenerated = debateSession([
      { text: "I support the levy." },
      { text: "Fresh angle.", regeneration_count: 1 },
    ]);
    const api = new ApiClient(
      "",
      fakeFetch(
        debateRoutes([
          {
            method: "POST",
            path: "/debate/deb1/turns/1/feedback",
            handler: () => ({ json: regenerated }),
          },
        ]),
        calls,
      ),
    );
    const panel = new DebatePanel(root, api, "d1");
    await panel.send("I support the levy.");
    (root.querySelector(".thumbs-down") as HTMLButtonElement).click();

    await vi.waitFor(() => {
      expect(root.querySelectorAll(".chat-turn")[1]!.querySelector(".chat-text")!.textContent).toBe(
        "Fresh angle.",
      );
    });
    expect(root.querySelector(".regen-badge")).not.toBeNull();
  });

  it("renders a limit notice on 409 and keeps the current text", async () => {
    const api = new ApiClient(
      "",
      fakeFetch(
        debateRoutes([
          {
            method: "POST",
            path: "/debate/deb1/turns/1/feedback",
            handler: () => ({
              status: 409,
              json: errorBody("RegenerationLimitExceeded", "turn 1 hit the regen cap"),
            }),
          },
        ]),
        calls,
      ),
    );
    const panel = new DebatePanel(root, api, "d1");
    await panel.send("I support the levy.");

    await panel.thumbs(1, "down");

    expect(root.querySelector(".debate-notice")!.textContent).toBe(
      "regeneration limit reached",
    );
    expect(root.querySelectorAll(".chat-turn")[1]!.querySelector(".chat-text")!.textContent).toBe(
      "Consider the audit first.",
    );
  });

  it("rethrows non-409 feedback failures", async () => {
    const api = new ApiClient(
      "",
      fakeFetch(
        debateRoutes([
          {
            method: "POST",
            path: "/debate/deb1/turns/1/feedback",
            handler: () => ({ status: 503, json: errorBody("RegenerationFailed", "no new text") }),
          },
        ]),
        calls,
      ),
    );
    const panel = new DebatePanel(root, api, "d1");
    await panel.send("I support the levy.");
    await expect(panel.thumbs(1, "down")).rejects.toMatchObject({
      code: "RegenerationFailed",
    });
  });
});

// @vitest-environment happy-dom

import { beforeEach, describe, expect, it } from "vitest";

import type { EventItemDto } from "../src/api.js";
import { SessionRecorder, bindFocusTracking } from "../src/events.js";

let clock: number;
let posted: EventItemDto[][];
let recorder: SessionRecorder;

beforeEach(() => {
  document.body.innerHTML = "";
  clock = 5000;
  posted = [];
  recorder = new SessionRecorder(
    async (events) => void posted.push(events.map((e) => ({ ...e }))),
    () => clock,
  );
});

function region(id: string): HTMLElement {
  const el = document.createElement("section");
  el.id = id;
  el.tabIndex = 0;
  const button = document.createElement("button");
  button.textContent = "inner";
  el.appendChild(button);
  document.body.appendChild(el);
  return el;
}

describe("bindFocusTracking", () => {
  it("maps focusin and focusout to enter and exit", async () => {
    const qa = region("qa");
    bindFocusTracking(recorder, [{ element: qa, feature: "qa" }]);

    qa.dispatchEvent(new FocusEvent("focusin", { bubbles: true }));
    clock += 5000;
    qa.dispatchEvent(new FocusEvent("focusout", { bubbles: true }));
    await recorder.flush();

    const stream = posted.flat();
    expect(stream.map((e) => `${e.kind}:${e.feature}`)).toEqual(["enter:qa", "exit:qa"]);
    expect(stream[1]!.timestamp_ms - stream[0]!.timestamp_ms).toBe(5000);
  });

  it("does not exit when focus moves within the region", async () => {
    const qa = region("qa");
    const inner = qa.querySelector("button")!;
    bindFocusTracking(recorder, [{ element: qa, feature: "qa" }]);

    qa.dispatchEvent(new FocusEvent("focusin", { bubbles: true }));
    clock += 100;
    qa.dispatchEvent(new FocusEvent("focusout", { bubbles: true, relatedTarget: inner }));
    qa.dispatchEvent(new FocusEvent("focusin", { bubbles: true }));
    clock += 100;
    qa.dispatchEvent(new FocusEvent("focusout", { bubbles: true }));
    await recorder.flush();

    expect(posted.flat().map((e) => `${e.kind}:${e.feature}`)).toEqual([
      "enter:qa",
      "exit:qa",
    ]);
  });

  it("keeps the stream single-open across region hops", async () => {
    const qa = region("qa");
    const counters = region("counters");
    bindFocusTracking(recorder, [
      { element: qa, feature: "qa" },
      { element: counters, feature: "counters" },
    ]);

    qa.dispatchEvent(new FocusEvent("focusin", { bubbles: true }));
    clock += 300;
    // browsers fire focusout on the old region before focusin on the new one
    qa.dispatchEvent(
      new FocusEvent("focusout", { bubbles: true, relatedTarget: counters }),
    );
    counters.dispatchEvent(new FocusEvent("focusin", { bubbles: true }));
    clock += 200;
    counters.dispatchEvent(new FocusEvent("focusout", { bubbles: true }));
    await recorder.flush();

    expect(posted.flat().map((e) => `${e.kind}:${e.feature}`)).toEqual([
      "enter:qa",
      "exit:qa",
      "enter:counters",
      "exit:counters",
    ]);
  });
});

// Feature timing instrument. Focus and blur are the deliberate granularity
// (no pointer tracking): each focused surface opens an interval, and at most
// one interval is open at a time, so the emitted stream always satisfies the
// server's nesting rules. Batches post in timestamp order; a failed post
// leaves the buffer untouched so the retry replays the same events in the
// same order.

import type { EventItemDto } from "./api.js";

export type Feature =
  | "article"
  | "claims"
  | "counters"
  | "context"
  | "qa"
  | "debateme"
  | "highlight"
  | "idle";

export type PostEvents = (events: EventItemDto[]) => Promise<void>;

export class SessionRecorder {
  private buffer: EventItemDto[] = [];
  private openFeature: Feature | null = null;
  private lastTs = 0;
  private queue: Promise<void> = Promise.resolve();

  constructor(
    private readonly post: PostEvents,
    private readonly now: () => number = Date.now,
    private readonly batchSize = 25,
  ) {}

  current(): Feature | null {
    return this.openFeature;
  }

  pendingCount(): number {
    return this.buffer.length;
  }

  enter(feature: Feature): void {
    if (this.openFeature === feature) return;
    const ts = this.stamp();
    if (this.openFeature !== null) {
      this.buffer.push({ feature: this.openFeature, kind: "exit", timestamp_ms: ts });
    }
    this.buffer.push({ feature, kind: "enter", timestamp_ms: ts });
    this.openFeature = feature;
    this.maybeFlush();
  }

  exit(feature: Feature): void {
    if (this.openFeature !== feature) return;
    this.buffer.push({ feature, kind: "exit", timestamp_ms: this.stamp() });
    this.openFeature = null;
    this.maybeFlush();
  }

  /** Close whatever is open, e.g. before unload. */
  closeOpen(): void {
    if (this.openFeature !== null) this.exit(this.openFeature);
  }

  /**
   * Post buffered events, serially: concurrent calls queue behind each other.
   * A transport failure resolves quietly and keeps the buffer for the next
   * attempt.
   */
  flush(): Promise<void> {
    this.queue = this.queue.then(() => this.drain());
    return this.queue;
  }

  private stamp(): number {
    // the server rejects time going backwards inside a session
    const ts = Math.max(this.now(), this.lastTs);
    this.lastTs = ts;
    return ts;
  }

  private maybeFlush(): void {
    if (this.buffer.length >= this.batchSize) void this.flush();
  }

  private async drain(): Promise<void> {
    while (this.buffer.length > 0) {
      const batch = this.buffer.slice();
      try {
        await this.post(batch);
      } catch {
        return;
      }
      this.buffer.splice(0, batch.length);
    }
  }
}

export interface FeatureRegion {
  element: HTMLElement;
  feature: Feature;
}

/** Wire focusin/focusout on each region to enter/exit on the recorder. */
export function bindFocusTracking(
  recorder: SessionRecorder,
  regions: readonly FeatureRegion[],
): void {
  for (const { element, feature } of regions) {
    element.addEventListener("focusin", () => recorder.enter(feature));
    element.addEventListener("focusout", (event) => {
      const next = (event as FocusEvent).relatedTarget;
      if (next !== null && next instanceof Node && element.contains(next)) {
        return; // focus moved within the same region
      }
      recorder.exit(feature);
    });
  }
}

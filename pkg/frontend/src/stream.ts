import type { EventRecord } from "./types.js";

export interface StreamOptions {
  /** called for every event, in server log order */
  onEvent: (ev: EventRecord) => void;
  onError?: (err: unknown) => void;
  /** delay before reconnecting after a drop (ms) */
  retryMs?: number;
  token?: string;
}

/**
 * NDJSON event-stream client with a since-cursor.
 *
 * The server flushes everything past the cursor and closes; we keep the
 * highest seq seen and reconnect with it, so a dropped connection can
 * produce neither gaps nor duplicates — the cursor is the dedupe.
 */
export class EventStreamClient {
  cursor = 0;
  private stopped = false;

  constructor(
    private readonly baseUrl: string,
    private readonly opts: StreamOptions,
  ) {}

  stop(): void {
    this.stopped = true;
  }

  /** Single connection: read until the server closes or the socket dies.
   * Returns the number of events delivered. */
  async connectOnce(): Promise<number> {
    const headers: Record<string, string> = {};
    if (this.opts.token) headers["Authorization"] = `Bearer ${this.opts.token}`;
    const resp = await fetch(
      `${this.baseUrl}/events?since=${this.cursor}&follow=1`,
      { headers },
    );
    if (!resp.ok || !resp.body) {
      throw new Error(`stream failed: ${resp.status}`);
    }
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let delivered = 0;
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let nl;
      while ((nl = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, nl).trim();
        buffer = buffer.slice(nl + 1);
        if (!line) continue;
        const ev = JSON.parse(line) as EventRecord;
        if (ev.seq <= this.cursor) continue; // duplicate across reconnect
        this.cursor = ev.seq;
        delivered += 1;
        this.opts.onEvent(ev);
      }
    }
    return delivered;
  }

  /** Reconnect loop; resolves only after stop(). */
  async run(): Promise<void> {
    const retry = this.opts.retryMs ?? 2000;
    while (!this.stopped) {
      try {
        await this.connectOnce();
      } catch (err) {
        this.opts.onError?.(err);
      }
      if (this.stopped) break;
      await new Promise((r) => setTimeout(r, retry));
    }
  }
}

/** Polling fallback for environments without streaming bodies. */
export async function pollOnce(
  baseUrl: string,
  cursor: number,
  onEvent: (ev: EventRecord) => void,
): Promise<number> {
  const resp = await fetch(`${baseUrl}/events?since=${cursor}`);
  const doc = (await resp.json()) as { result: EventRecord[] };
  let next = cursor;
  for (const ev of doc.result) {
    if (ev.seq <= next) continue;
    next = ev.seq;
    onEvent(ev);
  }
  return next;
}

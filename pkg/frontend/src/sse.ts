import type { ConnectionStatus, StreamEvent } from "./types.js";

/** Incremental server-sent-event parser. Feed it raw text chunks in any
 * split; it yields one parsed event per complete `data:` frame and keeps
 * partial frames buffered. Comment lines (keep-alives) are ignored. */
export class SseParser {
  private buffer = "";

  push(chunk: string): StreamEvent[] {
    this.buffer += chunk;
    const events: StreamEvent[] = [];
    const frames = this.buffer.split(/\r?\n\r?\n/);
    this.buffer = frames.pop() ?? "";
    for (const frame of frames) {
      const dataLines: string[] = [];
      for (const line of frame.split(/\r?\n/)) {
        if (line.startsWith("data:")) {
          dataLines.push(line.slice(5).trimStart());
        }
      }
      if (dataLines.length === 0) continue; // comment-only frame
      try {
        events.push(JSON.parse(dataLines.join("\n")) as StreamEvent);
      } catch {
        // a malformed frame is dropped rather than killing the stream
      }
    }
    return events;
  }
}

export interface EventStreamOptions {
  onEvent: (event: StreamEvent) => void;
  onStatus?: (status: ConnectionStatus) => void;
  retryDelayMs?: number;
  fetchImpl?: typeof fetch;
}

const DEFAULT_RETRY_MS = 2000;

/** Long-lived subscription to a session's event stream with automatic
 * reconnection. Status changes drive the connection banner; the UI does
 * not replay missed events, it refreshes from snapshots on reconnect. */
export class EventStream {
  private controller: AbortController | null = null;
  private closed = false;
  private readonly retryDelayMs: number;
  private readonly fetchImpl: typeof fetch;

  constructor(
    private readonly url: string,
    private readonly options: EventStreamOptions,
  ) {
    this.retryDelayMs = options.retryDelayMs ?? DEFAULT_RETRY_MS;
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  start(): void {
    void this.run();
  }

  close(): void {
    this.closed = true;
    this.controller?.abort();
    this.setStatus("closed");
  }

  private setStatus(status: ConnectionStatus): void {
    this.options.onStatus?.(status);
  }

  private async run(): Promise<void> {
    this.setStatus("connecting");
    while (!this.closed) {
      try {
        await this.consumeOnce();
      } catch {
        // fall through to the retry path below
      }
      if (this.closed) return;
      this.setStatus("reconnecting");
      await delay(this.retryDelayMs);
    }
  }

  private async consumeOnce(): Promise<void> {
    this.controller = new AbortController();
    const response = await this.fetchImpl(this.url, {
      signal: this.controller.signal,
      headers: { Accept: "text/event-stream" },
    });
    if (!response.ok || !response.body) {
      throw new Error(`event stream failed with ${response.status}`);
    }
    this.setStatus("open");
    const parser = new SseParser();
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    while (true) {
      const { value, done } = await reader.read();
      if (done) break;
      for (const event of parser.push(decoder.decode(value, { stream: true }))) {
        this.options.onEvent(event);
      }
    }
  }
}

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

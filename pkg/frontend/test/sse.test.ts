import { describe, expect, it } from "vitest";

import { EventStream, SseParser } from "../src/sse.js";
import type {
  ConnectionStatus,
  LedgerSnapshot,
  SessionTranscript,
  StreamEvent,
} from "../src/types.js";
import { loadJson, loadText } from "./fixtures.js";

const recorded = loadText("refusal-events.sse.txt");
const refusalLedger = loadJson<LedgerSnapshot>("refusal-ledger.json");
const refusalTranscript = loadJson<SessionTranscript>("refusal-transcript.json");

function parseAll(text: string, chunkSize: number): StreamEvent[] {
  const parser = new SseParser();
  const events: StreamEvent[] = [];
  for (let i = 0; i < text.length; i += chunkSize) {
    events.push(...parser.push(text.slice(i, i + chunkSize)));
  }
  return events;
}

describe("SseParser", () => {
  it("parses the recorded refusal stream", () => {
    const events = parseAll(recorded, recorded.length);
    expect(events.map((e) => e.type)).toEqual([
      "connected",
      "turn",
      "turn",
      "ledger",
    ]);
    const [, userTurn, ceoTurn, ledger] = events;
    if (userTurn?.type !== "turn" || ceoTurn?.type !== "turn") {
      throw new Error("expected turn events");
    }
    // stream contents match the transcript the service stores
    expect(userTurn.role).toBe("user");
    expect(userTurn.content).toBe(refusalTranscript.turns[0]!.content);
    expect(ceoTurn.role).toBe("ceo");
    expect(ceoTurn.content).toBe(refusalTranscript.turns[1]!.content);
    if (ledger?.type !== "ledger") throw new Error("expected a ledger event");
    expect(ledger.snapshot).toEqual(refusalLedger);
  });

  it("is insensitive to chunk boundaries", () => {
    const whole = parseAll(recorded, recorded.length);
    for (const size of [1, 7, 64]) {
      expect(parseAll(recorded, size)).toEqual(whole);
    }
  });

  it("ignores keep-alive comments and tolerates CRLF", () => {
    const parser = new SseParser();
    expect(parser.push(": keep-alive\n\n")).toEqual([]);
    expect(parser.push('data: {"type": "connected"}\r\n\r\n')).toEqual([
      { type: "connected" },
    ]);
  });

  it("drops malformed frames without dying", () => {
    const parser = new SseParser();
    expect(parser.push("data: {nope\n\n")).toEqual([]);
    expect(parser.push('data: {"type": "connected"}\n\n')).toEqual([
      { type: "connected" },
    ]);
  });
});

function streamOf(text: string): Response {
  const body = new ReadableStream<Uint8Array>({
    start(controller) {
      controller.enqueue(new TextEncoder().encode(text));
      controller.close();
    },
  });
  return new Response(body, {
    status: 200,
    headers: { "Content-Type": "text/event-stream" },
  });
}

describe("EventStream", () => {
  it("reconnects after a failure and shows a banner state while down", async () => {
    const frames =
      'data: {"type": "connected"}\n\n' +
      'data: {"type": "turn", "role": "ceo", "content": "hi", "ts": 0, "name": null}\n\n';
    let calls = 0;
    const fetchImpl: typeof fetch = () => {
      calls += 1;
      if (calls === 1) return Promise.reject(new Error("service down"));
      if (calls === 2) return Promise.resolve(streamOf(frames));
      return new Promise(() => {}); // hold the third connection open
    };

    const events: StreamEvent[] = [];
    const statuses: ConnectionStatus[] = [];
    const stream = new EventStream("http://example/sessions/s/events", {
      onEvent: (event) => events.push(event),
      onStatus: (status) => statuses.push(status),
      retryDelayMs: 1,
      fetchImpl,
    });
    stream.start();

    await waitFor(() => events.length === 2 && calls >= 3);
    stream.close();

    expect(events[0]).toEqual({ type: "connected" });
    expect(statuses.slice(0, 3)).toEqual(["connecting", "reconnecting", "open"]);
    // the stream ending pushes it back into reconnecting until close()
    expect(statuses).toContain("reconnecting");
    expect(statuses[statuses.length - 1]).toBe("closed");
  });

  it("treats a non-200 response as a connection failure", async () => {
    let calls = 0;
    const fetchImpl: typeof fetch = () => {
      calls += 1;
      if (calls === 1) {
        return Promise.resolve(new Response("gone", { status: 404 }));
      }
      return new Promise(() => {});
    };
    const statuses: ConnectionStatus[] = [];
    const stream = new EventStream("http://example/x", {
      onEvent: () => {},
      onStatus: (status) => statuses.push(status),
      retryDelayMs: 1,
      fetchImpl,
    });
    stream.start();
    await waitFor(() => statuses.includes("reconnecting"));
    stream.close();
    expect(statuses[0]).toBe("connecting");
    expect(statuses).not.toContain("open");
  });
});

async function waitFor(check: () => boolean, timeoutMs = 2000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
  throw new Error("condition never became true");
}

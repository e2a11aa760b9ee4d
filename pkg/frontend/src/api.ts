import type {
  LedgerSnapshot,
  MemoryResponse,
  MessageResponse,
  RosterResponse,
  SessionCreated,
  SessionTranscript,
  ToolsResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly path: string,
    detail: string,
  ) {
    super(`${path} failed with ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function asJson<T>(path: string, response: Response): Promise<T> {
  if (!response.ok) {
    const detail = await response.text().catch(() => "");
    throw new ApiError(response.status, path, detail.slice(0, 200));
  }
  return (await response.json()) as T;
}

/** Thin client over the service API. The console performs no writes
 * except session creation and message posting. */
export class ConsoleApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    return asJson<T>(path, response);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson<T>(path, response);
  }

  createSession(): Promise<SessionCreated> {
    return this.post<SessionCreated>("/sessions", {});
  }

  transcript(sessionId: string): Promise<SessionTranscript> {
    return this.get<SessionTranscript>(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  sendMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return this.post<MessageResponse>(
      `/sessions/${encodeURIComponent(sessionId)}/messages`,
      { text },
    );
  }

  eventsUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${encodeURIComponent(sessionId)}/events`;
  }

  ledger(): Promise<LedgerSnapshot> {
    return this.get<LedgerSnapshot>("/admin/ledger");
  }

  roster(): Promise<RosterResponse> {
    return this.get<RosterResponse>("/admin/roster");
  }

  tools(): Promise<ToolsResponse> {
    return this.get<ToolsResponse>("/admin/tools");
  }

  memory(): Promise<MemoryResponse> {
    return this.get<MemoryResponse>("/admin/memory");
  }
}

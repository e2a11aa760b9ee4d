// Wire types for the agentfirm service API. Field names mirror the JSON
// exactly; the console never renames or recomputes what the service sends.

export interface LedgerSnapshot {
  spent_microcredits: number;
  spent_credits: number;
  expense_limit_microcredits: number;
  expense_limit_credits: number;
  remaining_microcredits: number;
  remaining_credits: number;
  by_category_microcredits: Record<string, number>;
  vram_capacity_gib: number;
  vram_reserved_gib: number;
  utilization_pct: number;
  peak_utilization_pct: number;
  reservations_gib: Record<string, number>;
}

export interface RosterAgent {
  agent_id: string;
  backend_id: string;
  locality: string;
  vram_footprint_gib: number;
  capability_tags: string[];
  state: string;
  hired_at: number;
  successes: number;
  failures: number;
  success_rate: number;
  accrued_cost_microcredits: number;
  last_used: number | null;
}

export interface RosterResponse {
  agents: RosterAgent[];
}

export interface MemoryEntry {
  key: string;
  kind: string;
  text: string;
  created_at: number;
}

export interface MemoryResponse {
  entries: MemoryEntry[];
}

export interface ToolParameterInfo {
  type: string;
  required: boolean;
  description: string;
}

export interface ToolInfo {
  name: string;
  description: string;
  parameters: Record<string, ToolParameterInfo>;
  implementation_ref: string;
  provenance: string;
  capabilities: { network: boolean; env: string[] };
}

export interface ToolsResponse {
  tools: ToolInfo[];
}

export interface Turn {
  role: string; // user | ceo | employee | tool
  content: string;
  ts: number;
  name: string | null;
}

export interface SessionTranscript {
  session_id: string;
  turns: Turn[];
  active: boolean;
}

export interface TraceEvent {
  seq: number;
  kind: string;
  ts: number;
  detail: Record<string, unknown>;
}

export interface MessageResponse {
  session_id: string;
  response: string;
  trace: TraceEvent[];
}

export interface SessionCreated {
  session_id: string;
}

// Events on GET /sessions/{id}/events. The stream carries finished turns
// and ledger snapshots; the full trace rides on the POST response.
export type StreamEvent =
  | { type: "connected" }
  | ({ type: "turn" } & Turn)
  | { type: "ledger"; snapshot: LedgerSnapshot };

export type ConnectionStatus = "connecting" | "open" | "reconnecting" | "closed";

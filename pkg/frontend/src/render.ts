import type {
  ConnectionStatus,
  LedgerSnapshot,
  MemoryResponse,
  RosterResponse,
  ToolsResponse,
  TraceEvent,
  Turn,
} from "./types.js";

// Renderers are pure string -> string so the fidelity tests can compare
// fixture fields against output byte for byte. Every number a panel shows
// is stamped into a data-value attribute exactly as the service sent it;
// the only derived figure anywhere is the budget bar's fill ratio.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function num(value: number): string {
  return String(value);
}

function field(name: string, value: number, unit = ""): string {
  const shown = num(value);
  return `<span class="num" data-field="${name}" data-value="${shown}">${shown}</span>${unit}`;
}

/** Percent of limit spent, at most one decimal, for the gauge label.
 * A full budget is rendered as exactly "100". */
export function budgetPct(snapshot: LedgerSnapshot): string {
  if (snapshot.expense_limit_microcredits === 0) return "0";
  const pct =
    (100 * snapshot.spent_microcredits) / snapshot.expense_limit_microcredits;
  const rounded = Math.round(pct * 10) / 10;
  return num(Number.isInteger(rounded) ? Math.round(rounded) : rounded);
}

export function renderBudgetGauge(snapshot: LedgerSnapshot): string {
  const pct = budgetPct(snapshot);
  const width = Math.max(0, Math.min(100, Number(pct)));
  const categories = Object.entries(snapshot.by_category_microcredits)
    .map(
      ([name, amount]) =>
        `<li>${escapeHtml(name)}: ${field(`by_category_microcredits.${name}`, amount, " ucr")}</li>`,
    )
    .join("");
  return [
    `<div class="gauge budget-gauge" data-pct="${pct}">`,
    `<div class="gauge-title">budget <span class="pct">${pct}%</span></div>`,
    `<div class="gauge-bar"><div class="gauge-fill" style="width:${width}%"></div></div>`,
    `<div class="gauge-detail">spent ${field("spent_credits", snapshot.spent_credits)}`,
    ` of ${field("expense_limit_credits", snapshot.expense_limit_credits)} cr,`,
    ` remaining ${field("remaining_credits", snapshot.remaining_credits)} cr</div>`,
    `<ul class="by-category">${categories}</ul>`,
    `</div>`,
  ].join("");
}

export function renderVramGauge(snapshot: LedgerSnapshot): string {
  const pct = num(snapshot.utilization_pct);
  const width = Math.max(0, Math.min(100, snapshot.utilization_pct));
  const reservations = Object.entries(snapshot.reservations_gib)
    .map(
      ([agent, gib]) =>
        `<li>${escapeHtml(agent)}: ${field(`reservations_gib.${agent}`, gib, " GiB")}</li>`,
    )
    .join("");
  return [
    `<div class="gauge vram-gauge" data-pct="${pct}">`,
    `<div class="gauge-title">VRAM <span class="pct">${pct}%</span></div>`,
    `<div class="gauge-bar"><div class="gauge-fill" style="width:${width}%"></div></div>`,
    `<div class="gauge-detail">${field("vram_reserved_gib", snapshot.vram_reserved_gib)}`,
    ` of ${field("vram_capacity_gib", snapshot.vram_capacity_gib)} GiB reserved,`,
    ` peak ${field("peak_utilization_pct", snapshot.peak_utilization_pct)}%</div>`,
    `<ul class="reservations">${reservations}</ul>`,
    `</div>`,
  ].join("");
}

export function renderRoster(roster: RosterResponse): string {
  if (roster.agents.length === 0) {
    return `<p class="empty">no employees hired</p>`;
  }
  const rows = roster.agents
    .map((agent) =>
      [
        `<tr class="agent" data-agent-id="${escapeHtml(agent.agent_id)}">`,
        `<td class="agent-id">${escapeHtml(agent.agent_id)}</td>`,
        `<td>${escapeHtml(agent.backend_id)}</td>`,
        `<td>${escapeHtml(agent.locality)}</td>`,
        `<td>${field("vram_footprint_gib", agent.vram_footprint_gib, " GiB")}</td>`,
        `<td>${agent.capability_tags.map(escapeHtml).join(", ")}</td>`,
        `<td>${field("successes", agent.successes)}/${field("failures", agent.failures)}</td>`,
        `<td>${field("success_rate", agent.success_rate)}</td>`,
        `<td>${field("accrued_cost_microcredits", agent.accrued_cost_microcredits, " ucr")}</td>`,
        `<td>${escapeHtml(agent.state)}</td>`,
        `</tr>`,
      ].join(""),
    )
    .join("");
  return [
    `<table class="roster"><thead><tr>`,
    `<th>agent</th><th>backend</th><th>locality</th><th>footprint</th>`,
    `<th>tags</th><th>ok/fail</th><th>rate</th><th>cost</th><th>state</th>`,
    `</tr></thead><tbody>${rows}</tbody></table>`,
  ].join("");
}

export function renderMemoryPanel(memory: MemoryResponse): string {
  if (memory.entries.length === 0) {
    return `<p class="empty">no memories stored</p>`;
  }
  const items = memory.entries
    .map((entry) =>
      [
        `<li class="memory-entry" data-key="${escapeHtml(entry.key)}">`,
        `<span class="memory-key">${escapeHtml(entry.key)}</span>`,
        `<span class="memory-kind">${escapeHtml(entry.kind)}</span>`,
        `<span class="memory-text">${escapeHtml(entry.text)}</span>`,
        `</li>`,
      ].join(""),
    )
    .join("");
  return `<ul class="memory">${items}</ul>`;
}

export function renderToolsPanel(tools: ToolsResponse): string {
  if (tools.tools.length === 0) {
    return `<p class="empty">no tools registered</p>`;
  }
  const items = tools.tools
    .map((tool) => {
      const params = Object.entries(tool.parameters)
        .map(
          ([name, spec]) =>
            `<li><code>${escapeHtml(name)}</code> (${escapeHtml(spec.type)}${
              spec.required ? ", required" : ""
            }): ${escapeHtml(spec.description)}</li>`,
        )
        .join("");
      return [
        `<li class="tool" data-name="${escapeHtml(tool.name)}">`,
        `<span class="tool-name">${escapeHtml(tool.name)}</span>`,
        `<span class="tool-provenance">${escapeHtml(tool.provenance)}</span>`,
        `<p class="tool-description">${escapeHtml(tool.description)}</p>`,
        `<ul class="tool-params">${params}</ul>`,
        `</li>`,
      ].join("");
    })
    .join("");
  return `<ul class="tools">${items}</ul>`;
}

export function renderTurn(turn: Turn): string {
  const name = turn.name
    ? `<span class="turn-name">${escapeHtml(turn.name)}</span>`
    : "";
  return [
    `<div class="turn turn-${escapeHtml(turn.role)}">`,
    `<span class="turn-role">${escapeHtml(turn.role)}</span>${name}`,
    `<div class="turn-content">${escapeHtml(turn.content)}</div>`,
    `</div>`,
  ].join("");
}

export function renderTrace(events: TraceEvent[]): string {
  const items = events
    .map(
      (event) =>
        `<li class="trace-event kind-${escapeHtml(event.kind)}" data-seq="${event.seq}">` +
        `<span class="kind">${escapeHtml(event.kind)}</span>` +
        `<code class="detail">${escapeHtml(JSON.stringify(event.detail))}</code></li>`,
    )
    .join("");
  return [
    `<details class="trace"><summary>trace (${events.length} events)</summary>`,
    `<ol>${items}</ol></details>`,
  ].join("");
}

const STATUS_TEXT: Record<ConnectionStatus, string> = {
  connecting: "connecting to event stream",
  open: "live",
  reconnecting: "connection lost, reconnecting",
  closed: "disconnected",
};

export function renderStatusBanner(status: ConnectionStatus): string {
  const hidden = status === "open" ? " hidden" : "";
  return `<div class="banner banner-${status}${hidden}">${STATUS_TEXT[status]}</div>`;
}

export function renderStaleIndicator(stale: boolean): string {
  return stale
    ? `<span class="stale">stale data, service unreachable</span>`
    : `<span class="stale hidden"></span>`;
}

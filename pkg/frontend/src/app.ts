import { ConsoleApi } from "./api.js";
import { EventStream } from "./sse.js";
import {
  renderBudgetGauge,
  renderMemoryPanel,
  renderRoster,
  renderStaleIndicator,
  renderStatusBanner,
  renderToolsPanel,
  renderTrace,
  renderTurn,
  renderVramGauge,
} from "./render.js";
import type { StreamEvent } from "./types.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function main(): Promise<void> {
  const api = new ConsoleApi("");
  const chat = el("chat");
  const banner = el("banner");
  const gauges = el("gauges");
  const stale = el("stale");
  const panels: Record<string, HTMLElement> = {
    roster: el("panel-roster"),
    memory: el("panel-memory"),
    tools: el("panel-tools"),
  };

  // locally echoed user turns the stream has not confirmed yet, so the
  // SSE copy of each is not rendered twice
  let pendingUserTurns = 0;

  const session = await api.createSession();
  el("session-id").textContent = session.session_id;

  function appendHtml(target: HTMLElement, html: string): void {
    target.insertAdjacentHTML("beforeend", html);
    target.scrollTop = target.scrollHeight;
  }

  function applyEvent(event: StreamEvent): void {
    if (event.type === "turn") {
      if (event.role === "user" && pendingUserTurns > 0) {
        pendingUserTurns -= 1;
        return;
      }
      appendHtml(chat, renderTurn(event));
    } else if (event.type === "ledger") {
      gauges.innerHTML =
        renderBudgetGauge(event.snapshot) + renderVramGauge(event.snapshot);
    }
  }

  async function refreshAdmin(): Promise<void> {
    try {
      const [ledger, roster, tools, memory] = await Promise.all([
        api.ledger(),
        api.roster(),
        api.tools(),
        api.memory(),
      ]);
      gauges.innerHTML = renderBudgetGauge(ledger) + renderVramGauge(ledger);
      panels.roster!.innerHTML = renderRoster(roster);
      panels.tools!.innerHTML = renderToolsPanel(tools);
      panels.memory!.innerHTML = renderMemoryPanel(memory);
      stale.innerHTML = renderStaleIndicator(false);
    } catch {
      stale.innerHTML = renderStaleIndicator(true);
    }
  }

  const stream = new EventStream(api.eventsUrl(session.session_id), {
    onEvent: applyEvent,
    onStatus: (status) => {
      banner.innerHTML = renderStatusBanner(status);
      if (status === "open") void refreshAdmin();
    },
  });
  stream.start();

  const form = el("composer") as HTMLFormElement;
  const input = el("composer-text") as HTMLInputElement;
  form.addEventListener("submit", (submitEvent) => {
    submitEvent.preventDefault();
    const text = input.value.trim();
    if (!text) return;
    input.value = "";
    pendingUserTurns += 1;
    appendHtml(
      chat,
      renderTurn({ role: "user", content: text, ts: Date.now() / 1000, name: null }),
    );
    void api
      .sendMessage(session.session_id, text)
      .then((message) => {
        appendHtml(chat, renderTrace(message.trace));
        return refreshAdmin();
      })
      .catch((error: unknown) => {
        appendHtml(
          chat,
          renderTurn({
            role: "ceo",
            content: `request failed: ${String(error)}`,
            ts: Date.now() / 1000,
            name: null,
          }),
        );
      });
  });

  for (const tab of Array.from(document.querySelectorAll<HTMLElement>(".tab"))) {
    tab.addEventListener("click", () => {
      for (const other of Array.from(document.querySelectorAll(".tab"))) {
        other.classList.toggle("active", other === tab);
      }
      for (const [name, panel] of Object.entries(panels)) {
        panel.classList.toggle("hidden", name !== tab.dataset["panel"]);
      }
    });
  }

  el("refresh").addEventListener("click", () => void refreshAdmin());
  await refreshAdmin();
}

void main();

import { ApiClient } from "./api.js";
import { ActionPanel } from "./actions.js";
import { EventStreamClient } from "./stream.js";
import {
  filterEvents,
  renderEventRow,
  renderHostBadge,
  renderPortRow,
  renderTopologySvg,
} from "./render.js";
import { buildTopologyViewModel } from "./viewmodel.js";
import type { EventRecord, Role } from "./types.js";

/** Browser bootstrap; everything here stays thin so the pieces above
 * remain testable without a DOM. */
async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "http://127.0.0.1:8420";
  const role = (params.get("role") ?? "netadmin") as Role;
  const token = params.get("token") ?? undefined;

  const api = new ApiClient(base, token);
  const panel = new ActionPanel(role);
  const mapEl = document.getElementById("map")!;
  const feedEl = document.getElementById("feed")!;
  const inspectorEl = document.getElementById("inspector")!;

  let renderedClock = 0;
  const events: EventRecord[] = [];

  async function repaint(): Promise<void> {
    const doc = await api.topology();
    const vm = buildTopologyViewModel(doc, renderedClock);
    renderedClock = Math.max(renderedClock, doc.clock);
    mapEl.innerHTML = renderTopologySvg(vm);
    for (const g of mapEl.querySelectorAll("[data-switch]")) {
      g.addEventListener("click", () =>
        openInspector((g as HTMLElement).dataset.switch!),
      );
    }
  }

  async function openInspector(switchId: string): Promise<void> {
    const [ports, quarantineRows] = await Promise.all([
      api.ports(switchId),
      api.view("quarantine_view"),
    ]);
    const quarantined = new Set(
      quarantineRows.map((r) => String(r["host"])),
    );
    inspectorEl.innerHTML =
      `<h2>${switchId}</h2>` +
      [...quarantined]
        .map((h) => renderHostBadge(h, true))
        .join(" ") +
      `<table>${ports.map(renderPortRow).join("")}</table>`;
  }

  const kindFilter = document.getElementById("kind") as HTMLInputElement;
  function repaintFeed(): void {
    const visible = filterEvents(events.slice(-200), kindFilter.value || undefined);
    feedEl.innerHTML = visible.map(renderEventRow).join("");
  }
  kindFilter.addEventListener("input", repaintFeed);

  const stream = new EventStreamClient(base, {
    token,
    onEvent: (ev) => {
      events.push(ev);
      repaintFeed();
      if (ev.kind === "LinkStateChanged" || ev.kind === "CommandApplied") {
        void repaint();
      }
    },
  });

  const actionForm = document.getElementById("action") as HTMLFormElement;
  actionForm.addEventListener("submit", async (e) => {
    e.preventDefault();
    const data = new FormData(actionForm);
    const op = String(data.get("op"));
    if (!panel.allows(op)) return; // control renders disabled anyway
    if (panel.needsConfirmation(op) && !window.confirm(`Run ${op}?`)) return;
    const args: Record<string, string> = {};
    for (const [k, v] of data.entries()) {
      if (k !== "op") args[k] = String(v);
    }
    const status = document.getElementById("status")!;
    try {
      await panel.submit(api, op, args);
      status.textContent = `${op}: applied`;
    } catch (err) {
      status.textContent = `${op}: ${String(err)}`;
    }
  });

  await repaint();
  void stream.run();
}

if (typeof document !== "undefined") {
  void boot();
}

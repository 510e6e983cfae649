import type { EventRecord, PortRow } from "./types.js";
import type { TopologyViewModel } from "./viewmodel.js";

/** Renderers return markup strings so they test the same way they
 * ship; main.ts owns the DOM. */

const esc = (s: string): string =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");

interface Point {
  x: number;
  y: number;
}

/** Deterministic layout: buildings become columns, switches circles
 * within them. Purely presentational — no physics needed for tests. */
export function layoutNodes(vm: TopologyViewModel): Map<string, Point> {
  const buildings = [...new Set(vm.nodes.map((n) => n.building))].sort();
  const pos = new Map<string, Point>();
  for (const [col, building] of buildings.entries()) {
    const members = vm.nodes.filter((n) => n.building === building);
    members.forEach((node, row) => {
      pos.set(node.id, {
        x: 120 + col * 260 + (row % 2) * 60,
        y: 80 + row * 90,
      });
    });
  }
  return pos;
}

export function renderTopologySvg(vm: TopologyViewModel): string {
  if (vm.nodes.length === 0) {
    return `<div class="empty-state">No topology loaded — is the control API running?</div>`;
  }
  const pos = layoutNodes(vm);
  const parts: string[] = [];
  const width = 160 + 260 * new Set(vm.nodes.map((n) => n.building)).size;
  const height = 120 + 90 * vm.nodes.length;
  parts.push(
    `<svg class="netmap${vm.stale ? " stale" : ""}" viewBox="0 0 ${width} ${height}">`,
  );
  if (vm.stale) {
    parts.push(`<text class="stale-banner" x="8" y="16">stale snapshot</text>`);
  }
  for (const edge of vm.edges) {
    const a = pos.get(edge.aSwitch);
    const b = pos.get(edge.bSwitch);
    if (!a || !b) continue;
    parts.push(
      `<line class="edge edge-${edge.state}" data-link="${esc(edge.id)}" ` +
        `x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}"/>`,
    );
  }
  for (const node of vm.nodes) {
    const p = pos.get(node.id)!;
    const cls = `node node-${node.kind}${node.isRoot ? " node-root" : ""}`;
    parts.push(
      `<g class="${cls}" data-switch="${esc(node.id)}">` +
        `<circle cx="${p.x}" cy="${p.y}" r="${node.kind === "core-stack" ? 26 : 18}"/>` +
        `<text x="${p.x}" y="${p.y + 4}">${esc(node.id)}</text></g>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

export function renderHostBadge(host: string, quarantined: boolean): string {
  const cls = quarantined ? "badge badge-quarantined" : "badge badge-ok";
  const label = quarantined ? "QUARANTINED" : "ok";
  return `<span class="${cls}" data-host="${esc(host)}">${esc(host)}: ${label}</span>`;
}

export function renderPortRow(row: PortRow): string {
  const flags = [
    row.err_disabled ? "err-disabled" : row.up ? "up" : "down",
    row.security ? `sec:${row.secmode}` : "",
  ]
    .filter(Boolean)
    .join(" ");
  return (
    `<tr data-port="${esc(row.ref)}"><td>${esc(row.ref)}</td>` +
    `<td>${esc(row.mode)}</td><td>${row.vlan ?? ""}</td>` +
    `<td>${esc(row.description)}</td><td>${esc(flags)}</td>` +
    `<td>${esc(row.stp_role)}/${esc(row.stp_state)}</td></tr>`
  );
}

export function renderEventRow(ev: EventRecord): string {
  const extras = Object.entries(ev.payload)
    .map(([k, v]) => `${k}=${String(v)}`)
    .join(" ");
  return (
    `<li class="event event-${esc(ev.kind)}" data-seq="${ev.seq}">` +
    `<span class="seq">#${ev.seq}</span> ${esc(ev.kind)} ${esc(extras)}</li>`
  );
}

export function filterEvents(
  events: EventRecord[],
  kind?: string,
): EventRecord[] {
  if (!kind) return events;
  return events.filter(
    (ev) => ev.kind === kind || ev.payload["alert"] === kind,
  );
}

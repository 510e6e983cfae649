import type { EdgeState, TopologyDoc } from "./types.js";

export interface NodeViewModel {
  id: string;
  kind: string;
  building: string;
  isRoot: boolean;
}

export interface EdgeViewModel {
  id: string;
  aSwitch: string;
  bSwitch: string;
  aPort: string;
  bPort: string;
  state: EdgeState;
  capacity: string;
}

export interface TopologyViewModel {
  nodes: NodeViewModel[];
  edges: EdgeViewModel[];
  clock: number;
  /** true when the snapshot is older than something we already rendered */
  stale: boolean;
}

const switchOf = (portRef: string): string => portRef.split(":", 1)[0];

export function buildTopologyViewModel(
  doc: TopologyDoc,
  lastRenderedClock = 0,
): TopologyViewModel {
  return {
    nodes: doc.nodes.map((n) => ({
      id: n.id,
      kind: n.kind,
      building: n.building,
      isRoot: n.id === doc.root_bridge,
    })),
    edges: doc.edges.map((e) => ({
      id: e.id,
      aSwitch: switchOf(e.a),
      bSwitch: switchOf(e.b),
      aPort: e.a,
      bPort: e.b,
      state: e.state,
      capacity: e.class,
    })),
    clock: doc.clock,
    stale: doc.clock < lastRenderedClock,
  };
}

/** Edge states recomputed from a per-port STP view (role/state map), as
 * the overlay does after a reconvergence event. Must agree with the
 * server's own edge classification. */
export function edgeStatesFromStpView(
  vm: TopologyViewModel,
  stpView: Record<string, { role: string; state: string }>,
): Record<string, EdgeState> {
  const out: Record<string, EdgeState> = {};
  for (const edge of vm.edges) {
    const a = stpView[edge.aPort];
    const b = stpView[edge.bPort];
    if (!a || !b || a.state === "down" || b.state === "down") {
      out[edge.id] = "down";
    } else if (a.state === "forwarding" && b.state === "forwarding") {
      out[edge.id] = "forwarding";
    } else {
      out[edge.id] = "blocking";
    }
  }
  return out;
}

/** Deterministic VLAN color so the same VLAN looks the same on every
 * render and every client. */
export function vlanColor(vlan: number | null): string {
  if (vlan === null) return "#999999";
  const hue = (vlan * 137) % 360; // golden-angle spread
  return `hsl(${hue}, 65%, 55%)`;
}

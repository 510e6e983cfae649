/** Wire types for the control API. Shapes mirror the server documents
 * exactly; everything arrives wrapped in `{"result": ...}`. */

export type EdgeState = "forwarding" | "blocking" | "down";

export interface SwitchNode {
  id: string;
  kind: string;
  building: string;
  elements: number;
}

export interface TopologyEdge {
  id: string;
  a: string; // port ref "SW:unit/port"
  b: string;
  state: EdgeState;
  class: string;
}

export interface TopologyDoc {
  nodes: SwitchNode[];
  edges: TopologyEdge[];
  root_bridge: string | null;
  clock: number;
}

export interface PortRow {
  ref: string;
  mode: string;
  vlan: number | null;
  description: string;
  security: boolean;
  secmode: string | null;
  sticky: string[];
  violations: number;
  err_disabled: boolean;
  up: boolean;
  stp_role: string;
  stp_state: string;
}

export interface EventRecord {
  at: number;
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface LocationDoc {
  host: string;
  jack: string | null;
  room: string | null;
  building: string | null;
  port: string | null;
  vlan: number | null;
}

export type ViewRow = Record<string, unknown>;

export type Role = "servicedesk" | "desktop" | "netadmin";

import type { ApiClient } from "./api.js";
import type { Role } from "./types.js";

/** Client-side mirror of the server role map. The server re-checks
 * every call; this only drives which controls render enabled. */
const READ_OPS = [
  "get_topology",
  "get_ports",
  "get_events",
  "query",
  "locate",
  "blocked_report",
];

const OPS_BY_ROLE: Record<Role, string[]> = {
  servicedesk: [...READ_OPS, "clear_sticky"],
  desktop: [
    ...READ_OPS,
    "clear_sticky",
    "start_ghost",
    "distribute_ghost",
    "teardown_ghost",
  ],
  netadmin: [
    ...READ_OPS,
    "clear_sticky",
    "start_ghost",
    "distribute_ghost",
    "teardown_ghost",
    "move_port_vlan",
    "quarantine",
    "unquarantine",
    "inject_fault",
    "failover",
    "failback",
    "advance",
    "sync_inventory",
  ],
};

/** Ops that get a confirmation dialog before submit. */
const DESTRUCTIVE = new Set([
  "quarantine",
  "inject_fault",
  "failover",
  "failback",
  "teardown_ghost",
]);

export class ForbiddenLocally extends Error {}

export interface ActionArgs {
  [key: string]: string | number;
}

export class ActionPanel {
  private counter = 0;

  constructor(readonly role: Role) {}

  allows(op: string): boolean {
    return OPS_BY_ROLE[this.role].includes(op);
  }

  needsConfirmation(op: string): boolean {
    return DESTRUCTIVE.has(op);
  }

  /** Controls for ops the role lacks render disabled, never hidden —
   * the delegation boundary should be visible. */
  enabledOps(): string[] {
    return OPS_BY_ROLE[this.role];
  }

  private nextKey(op: string): string {
    this.counter += 1;
    return `console-${op}-${Date.now()}-${this.counter}`;
  }

  async submit(
    api: ApiClient,
    op: string,
    args: ActionArgs,
  ): Promise<unknown> {
    if (!this.allows(op)) {
      throw new ForbiddenLocally(`role ${this.role} may not ${op}`);
    }
    switch (op) {
      case "move_port_vlan":
        return api.movePortVlan(
          String(args.port),
          Number(args.vlan),
          this.nextKey(op),
        );
      case "clear_sticky":
        return api.clearSticky(String(args.port));
      case "quarantine":
        return api.quarantine(
          String(args.host),
          args.reason === undefined ? undefined : String(args.reason),
          this.nextKey(op),
        );
      case "unquarantine":
        return api.unquarantine(String(args.host));
      case "start_ghost":
        return api.startGhost(String(args.manifest), this.nextKey(op));
      case "distribute_ghost":
        return api.distributeGhost(Number(args.session), Number(args.bytes));
      case "teardown_ghost":
        return api.teardownGhost(Number(args.session));
      case "inject_fault":
        return api.injectFault(String(args.fault));
      case "failover":
        return api.failover(String(args.pair));
      case "failback":
        return api.failback(String(args.pair));
      case "advance":
        return api.advance(String(args.duration));
      default:
        throw new Error(`no submit mapping for ${op}`);
    }
  }
}

import type {
  EventRecord,
  LocationDoc,
  PortRow,
  TopologyDoc,
  ViewRow,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

/** Thin fetch wrapper over the control API. The console performs no
 * state mutation except through these documented endpoints. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  private headers(extra?: Record<string, string>): Record<string, string> {
    const h: Record<string, string> = { ...extra };
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    idempotencyKey?: string,
  ): Promise<T> {
    const headers = this.headers(
      body !== undefined ? { "Content-Type": "application/json" } : {},
    );
    if (idempotencyKey) headers["Idempotency-Key"] = idempotencyKey;
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await resp.text();
    let doc: { result?: T; error?: string };
    try {
      doc = JSON.parse(text);
    } catch {
      throw new ApiError(resp.status, text.slice(0, 200));
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, doc.error ?? resp.statusText);
    }
    return doc.result as T;
  }

  topology(): Promise<TopologyDoc> {
    return this.request("GET", "/topology");
  }

  ports(switchId?: string): Promise<PortRow[]> {
    const q = switchId ? `?switch=${encodeURIComponent(switchId)}` : "";
    return this.request("GET", `/ports${q}`);
  }

  view(name: string, filter?: Record<string, string>): Promise<ViewRow[]> {
    const q = filter ? `?${new URLSearchParams(filter)}` : "";
    return this.request("GET", `/views/${name}${q}`);
  }

  locate(host: string): Promise<LocationDoc> {
    return this.request("GET", `/hosts/${encodeURIComponent(host)}`);
  }

  eventsSince(since: number): Promise<EventRecord[]> {
    return this.request("GET", `/events?since=${since}`);
  }

  movePortVlan(ref: string, vlan: number, key?: string): Promise<unknown> {
    return this.request(
      "POST",
      `/ports/${encodeURIComponent(ref)}/vlan`,
      { vlan },
      key,
    );
  }

  clearSticky(ref: string): Promise<unknown> {
    return this.request(
      "POST",
      `/ports/${encodeURIComponent(ref)}/clear-sticky`,
    );
  }

  quarantine(host: string, reason?: string, key?: string): Promise<unknown> {
    return this.request("POST", "/quarantine", { host, reason }, key);
  }

  unquarantine(host: string): Promise<unknown> {
    return this.request(
      "DELETE",
      `/quarantine/${encodeURIComponent(host)}`,
    );
  }

  startGhost(manifest: string, key?: string): Promise<{ session: number }> {
    return this.request("POST", "/ghost-sessions", { manifest }, key);
  }

  distributeGhost(session: number, bytes: number): Promise<unknown> {
    return this.request("POST", `/ghost-sessions/${session}/distribute`, {
      bytes,
    });
  }

  teardownGhost(session: number): Promise<unknown> {
    return this.request("DELETE", `/ghost-sessions/${session}`);
  }

  injectFault(fault: string): Promise<unknown> {
    return this.request("POST", "/faults", { fault });
  }

  failover(pair: string): Promise<unknown> {
    return this.request("POST", `/failover/${pair}`);
  }

  failback(pair: string): Promise<unknown> {
    return this.request("POST", `/failback/${pair}`);
  }

  advance(duration: string): Promise<{ clock: number }> {
    return this.request("POST", "/advance", { duration });
  }
}

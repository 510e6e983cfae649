"""Distributed spanning tree over the switch graph.

Classic 802.1D-style behavior: per-bridge BPDU exchange elects the lowest
BridgeId as root, each bridge picks a root port by path cost, and every
link gets exactly one designated end; the other end is either a root port
(forwarding) or an alternate (blocking).  BPDU rounds run as scheduled
hello-interval events inside the simulator; a fast_mode flag collapses
forward_delay so tests run in milliseconds.

One STP instance spans all switches regardless of VLANs.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import simcore
from .errors import NoConvergence, NotEdgePort, UnknownTarget
from .topology import Link, NetTopology, PortRef

LINK_COST = {"fast": 19, "gigabit": 4}


@dataclass(frozen=True, order=True)
class BridgeId:
    priority: int
    mac: str

    def __str__(self):
        return f"{self.priority}.{self.mac}"


@dataclass(frozen=True, order=True)
class Bpdu:
    """Comparison order (root, cost, sender, sender_port): lower is better.

    `age` is a hop count from the claimed root; information older than
    MAX_AGE_HOPS is discarded, which bounds stale-root churn after the
    root bridge itself disappears.
    """
    root: BridgeId
    cost: int
    sender: BridgeId
    sender_port: int
    age: int = 0


MAX_AGE_HOPS = 20


@dataclass
class StpTimers:
    hello: int = 2 * simcore.NS_PER_SEC
    forward_delay: int = 15 * simcore.NS_PER_SEC
    max_age: int = 20 * simcore.NS_PER_SEC
    fast_mode: bool = False

    @classmethod
    def fast(cls) -> "StpTimers":
        return cls(hello=10 * simcore.NS_PER_MS, forward_delay=0,
                   max_age=80 * simcore.NS_PER_MS, fast_mode=True)

    @property
    def reconvergence_bound(self) -> int:
        """Documented bound: max_age plus the two forwarding transitions."""
        return self.max_age + 2 * self.forward_delay


def _port_id(ref: PortRef) -> int:
    return ref.unit * 4096 + ref.port


class StpProcess:
    """Owns per-port STP state for every switch in a topology."""

    def __init__(self, sim, topo: NetTopology, timers: StpTimers | None = None):
        self.sim = sim
        self.topo = topo
        self.timers = timers or StpTimers()
        self.bridge_ids = {
            sw.id: BridgeId(sw.priority, sw.mac) for sw in topo.switches.values()
        }
        self._received: dict[PortRef, Bpdu] = {}
        self._transmit: dict[str, tuple] = {}      # switch -> (root, cost)
        self._generation: dict[PortRef, int] = {}
        self._round_pending = False
        topo.add_link_observer(self._on_link_observer)
        self._init_edge_ports()

    # -- public surface ------------------------------------------------------

    def converge(self, deadline: int | None = None) -> dict:
        """Run BPDU rounds until steady state; returns the per-port view.

        Raises NoConvergence if no steady state is reached before the
        deadline (simulated time bound).
        """
        if deadline is None:
            deadline = self.sim.clock + 64 * max(
                self.timers.hello, simcore.NS_PER_MS) + 4 * self.timers.forward_delay
        self._kick()
        while self._round_pending or self._transitions_pending():
            nxt = self.sim.next_event_at()
            if nxt is None:
                break
            if nxt > deadline:
                raise NoConvergence(f"no steady state by t={deadline}")
            self.sim.run_until(nxt)
        return self.view()

    def on_link_change(self, link: Link, new_state: str) -> None:
        """Reconvergence entry point; normally invoked via the topology
        observer when a fault changes a link's effective state."""
        for ref in (link.a, link.b):
            self._received.pop(ref, None)
            if new_state == "down":
                self._set_state(ref, "blocking", role="disabled")
        self._kick()

    def set_portfast(self, ref: PortRef, enabled: bool) -> None:
        if self.topo.link_for_port(ref) is not None:
            raise NotEdgePort(f"{ref} carries an inter-switch link")
        port = self.topo.port(ref)
        port.stp.portfast = enabled

    def edge_link_up(self, ref: PortRef) -> None:
        """A host-facing port came up; portfast skips listening/learning."""
        port = self.topo.port(ref)
        if self.topo.link_for_port(ref) is not None:
            raise NotEdgePort(f"{ref} is not an edge port")
        port.stp.role = "designated"
        if port.stp.portfast or self.timers.fast_mode:
            self._set_state(ref, "forwarding", role="designated")
        else:
            self._begin_forward_transition(ref)

    def view(self) -> dict:
        """Per-port (role, state) export for the console overlay."""
        out = {}
        for sw in self.topo.switches.values():
            for port in sw.ports.values():
                out[str(port.ref)] = {
                    "role": port.stp.role,
                    "state": port.stp.state,
                    "portfast": port.stp.portfast,
                }
        return out

    def root_bridge(self) -> str:
        best = min(self.bridge_ids.items(), key=lambda kv: kv[1])
        roots = {
            sw_id
            for sw_id, info in self._transmit.items()
            if info and info[0] == self.bridge_ids[sw_id]
        }
        return sorted(roots)[0] if roots else best[0]

    def forwarding_links(self) -> list[Link]:
        out = []
        for link in self.topo.up_links():
            a, b = self.topo.port(link.a), self.topo.port(link.b)
            if a.stp.state == "forwarding" and b.stp.state == "forwarding":
                out.append(link)
        return out

    def link_is_forwarding(self, link: Link) -> bool:
        if not self.topo.link_effective_up(link):
            return False
        return (self.topo.port(link.a).stp.state == "forwarding"
                and self.topo.port(link.b).stp.state == "forwarding")

    # -- internals -------------------------------------------------------------

    def _init_edge_ports(self) -> None:
        for sw in self.topo.switches.values():
            for port in sw.ports.values():
                if self.topo.link_for_port(port.ref) is None:
                    port.stp.role = "designated"
                    if port.stp.portfast or self.timers.fast_mode:
                        port.stp.state = "forwarding"

    def _on_link_observer(self, link: Link, new_state: str, at) -> None:
        self.on_link_change(link, new_state)

    def _kick(self) -> None:
        if not self._round_pending:
            self._round_pending = True
            self.sim.emit("TimerExpiry", {"timer": "stp-round"}, self._round)

    def _round(self, _event) -> None:
        self._round_pending = False
        changed = self._compute_and_assign()
        changed |= self._exchange()
        if changed:
            self._round_pending = True
            self.sim.after(max(self.timers.hello, 1), "TimerExpiry",
                           {"timer": "stp-round"}, self._round)

    def _stp_ports(self, sw_id: str) -> list[tuple[PortRef, Link]]:
        out = []
        sw = self.topo.switches[sw_id]
        for port in sw.ports.values():
            link = self.topo.link_for_port(port.ref)
            if link is not None and self.topo.link_effective_up(link):
                out.append((port.ref, link))
        return out

    def _compute_and_assign(self) -> bool:
        changed = False
        for sw_id, my_bid in self.bridge_ids.items():
            ports = self._stp_ports(sw_id)
            best_key = None
            root_port = None
            root_age = 0
            for ref, link in ports:
                rcv = self._received.get(ref)
                if rcv is None or rcv.age >= MAX_AGE_HOPS:
                    continue
                cost = rcv.cost + LINK_COST.get(link.capacity_class, 19)
                key = (rcv.root, cost, rcv.sender, rcv.sender_port, _port_id(ref))
                if best_key is None or key < best_key:
                    best_key = key
                    root_port = ref
                    root_age = rcv.age + 1
            if best_key is not None and best_key[0] < my_bid:
                root, root_cost = best_key[0], best_key[1]
            else:
                root, root_cost, root_port, root_age = my_bid, 0, None, 0
            info = (root, root_cost, root_age)
            if self._transmit.get(sw_id) != info:
                self._transmit[sw_id] = info
                changed = True
            # roles
            for ref, link in ports:
                if ref == root_port:
                    self._assign_role(ref, "root")
                    continue
                mine = Bpdu(root, root_cost, my_bid, _port_id(ref))
                rcv = self._received.get(ref)
                if rcv is None or rcv.age >= MAX_AGE_HOPS or \
                        (mine.root, mine.cost, mine.sender, mine.sender_port) < \
                        (rcv.root, rcv.cost, rcv.sender, rcv.sender_port):
                    self._assign_role(ref, "designated")
                else:
                    self._assign_role(ref, "alternate")
        return changed

    def _exchange(self) -> bool:
        changed = False
        for link in self.topo.up_links():
            for src, dst in ((link.a, link.b), (link.b, link.a)):
                sender = self.bridge_ids[src.switch]
                info = self._transmit.get(src.switch)
                if info is None:
                    continue
                bpdu = Bpdu(info[0], info[1], sender, _port_id(src), info[2])
                if self._received.get(dst) != bpdu:
                    self._received[dst] = bpdu
                    changed = True
        return changed

    def _assign_role(self, ref: PortRef, role: str) -> None:
        port = self.topo.port(ref)
        old_role = port.stp.role
        port.stp.role = role
        if role == "alternate":
            # alternate implies blocking in steady state, immediately
            if port.stp.state != "blocking":
                self._set_state(ref, "blocking", role=role)
            return
        if old_role != role or port.stp.state == "blocking":
            if port.stp.state != "forwarding":
                if self.timers.fast_mode or self.timers.forward_delay == 0:
                    self._set_state(ref, "forwarding", role=role)
                else:
                    self._begin_forward_transition(ref)

    def _begin_forward_transition(self, ref: PortRef) -> None:
        gen = self._generation.get(ref, 0) + 1
        self._generation[ref] = gen
        port = self.topo.port(ref)
        port.stp.state = "listening"
        fd = self.timers.forward_delay

        def to_learning(_e, ref=ref, gen=gen):
            if self._generation.get(ref) == gen and \
                    self.topo.port(ref).stp.state == "listening":
                self.topo.port(ref).stp.state = "learning"

        def to_forwarding(_e, ref=ref, gen=gen):
            if self._generation.get(ref) == gen and \
                    self.topo.port(ref).stp.state == "learning":
                self._set_state(ref, "forwarding",
                                role=self.topo.port(ref).stp.role)

        self.sim.after(fd, "TimerExpiry",
                       {"timer": "stp-learn", "port": str(ref)}, to_learning)
        self.sim.after(2 * fd, "TimerExpiry",
                       {"timer": "stp-forward", "port": str(ref)}, to_forwarding)

    def _set_state(self, ref: PortRef, state: str, role: str) -> None:
        port = self.topo.port(ref)
        if state == "blocking":
            self._generation[ref] = self._generation.get(ref, 0) + 1
        if port.stp.state != state:
            port.stp.state = state
            self.topo.bump()
        port.stp.role = role

    def _transitions_pending(self) -> bool:
        for sw in self.topo.switches.values():
            for port in sw.ports.values():
                if port.stp.state in ("listening", "learning"):
                    return True
        return False


def brute_force_spanning_tree_ok(topo: NetTopology, stp: StpProcess) -> bool:
    """Independent oracle: the forwarding inter-switch edge set must be a
    spanning tree of each connected component of the up-link graph."""
    up = topo.up_links()
    comp = _components({sw for sw in topo.switches}, up)
    fwd = stp.forwarding_links()
    fwd_comp = _components({sw for sw in topo.switches}, fwd)
    if comp != fwd_comp:
        return False
    # per component: |edges| == |vertices| - 1 and acyclic (implied together
    # with connectivity, but check cycles independently)
    for component in comp:
        edges = [l for l in fwd
                 if l.a.switch in component and l.b.switch in component]
        if len(edges) != len(component) - 1:
            return False
    return not _has_cycle({sw for sw in topo.switches}, fwd)


def _components(vertices: set[str], links) -> list[set[str]]:
    adj: dict[str, set[str]] = {v: set() for v in vertices}
    for l in links:
        adj[l.a.switch].add(l.b.switch)
        adj[l.b.switch].add(l.a.switch)
    out, seen = [], set()
    for v in sorted(vertices):
        if v in seen:
            continue
        comp, stack = {v}, [v]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        out.append(comp)
    return sorted(out, key=lambda c: sorted(c)[0])


def _has_cycle(vertices: set[str], links) -> bool:
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for l in links:
        ra, rb = find(l.a.switch), find(l.b.switch)
        if ra == rb:
            return True
        parent[ra] = rb
    return False

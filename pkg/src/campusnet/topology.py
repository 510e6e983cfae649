"""The simulated plant: switches, stack rings, links, UPS feeds, jacks,
patch panels, hosts and router boxes, loaded from a line-oriented config.

Config grammar (one directive per line, `#` comments, key=value options):

    vlan <id> [name=..] [subnet=CIDR] [purpose=..] [owner=..]
    ups <name>
    switch <id> kind=access|core-stack mac=.. [priority=N] [building=..]
    element <switch> <idx> ups=<ups>
    ring <switch> <a>-<b>[,<a>-<b>...]
    spare <switch> <idx>
    port <sw>:<unit>/<n> mode=access|trunk [vlan=N] [allowed=N,N|all]
         [portfast=yes|no] [security=on] [secmode=shutdown|restrict|protect]
         [maxmacs=N] [description=..]
    link <sw>:<u>/<p> <sw>:<u>/<p> [class=fast|gigabit] [state=up|down]
    room <id> [building=..]
    jack <id> room=<room>
    patch <jack> <sw>:<u>/<p>
    host <id> mac=.. ip=.. [jack=..] [managed=analyst|user] [rp=..] [role=..]
    router <id> pair=internal|external role=primary|secondary [ups=..]
    gateway <pair> <vlan> <address>

Fault injection only changes link states and schedules events; it never
edits VLAN or security configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import simcore
from .errors import (
    DanglingReference,
    DuplicateMac,
    ElementNotFailed,
    NoSpare,
    ParseError,
    RingNotRedundant,
    UnknownTarget,
)

ALL_VLANS = "all"

# default one-hop propagation delay; uniform so reconvergence is deterministic
DEFAULT_HOP_DELAY = simcore.NS_PER_US


@dataclass(frozen=True, order=True)
class PortRef:
    switch: str
    unit: int
    port: int

    def __str__(self):
        return f"{self.switch}:{self.unit}/{self.port}"

    @classmethod
    def parse(cls, text: str) -> "PortRef":
        try:
            sw, rest = text.split(":")
            unit, port = rest.split("/")
            return cls(sw, int(unit), int(port))
        except ValueError:
            raise ValueError(f"bad port ref {text!r} (want SW:unit/port)")


@dataclass
class PortSecurity:
    enabled: bool = False
    max_macs: int = 1
    mode: str = "restrict"          # shutdown | restrict | protect
    sticky: list[str] = field(default_factory=list)
    violation_count: int = 0
    err_disabled: bool = False
    last_alert_at: simcore.SimTime | None = None


@dataclass
class StpPortState:
    role: str = "disabled"          # root | designated | alternate | disabled
    state: str = "blocking"         # blocking | listening | learning | forwarding
    portfast: bool = False


@dataclass
class SwitchPort:
    ref: PortRef
    mode: str = "access"            # access | trunk
    vlan: int = 1                   # access VLAN
    allowed: object = ALL_VLANS     # trunk allow-list: "all" or frozenset[int]
    description: str = ""
    security: PortSecurity = field(default_factory=PortSecurity)
    stp: StpPortState = field(default_factory=StpPortState)

    @property
    def auto_flag(self) -> bool:
        return self.description.startswith("[Auto]")

    def admits(self, vlan: int) -> bool:
        if self.mode == "access":
            return vlan == self.vlan
        return self.allowed == ALL_VLANS or vlan in self.allowed


@dataclass
class StackElement:
    idx: int
    ups: str
    failed: bool = False


@dataclass
class Switch:
    id: str
    kind: str = "access"            # access | core-stack
    mac: str = ""
    priority: int = 32768
    building: str = ""
    elements: dict[int, StackElement] = field(default_factory=dict)
    ring_links: list[tuple[int, int]] = field(default_factory=list)
    spare_element: int | None = None
    ports: dict[tuple[int, int], SwitchPort] = field(default_factory=dict)

    def port(self, unit: int, port: int) -> SwitchPort:
        return self.ports[(unit, port)]

    def element_alive(self, idx: int) -> bool:
        el = self.elements.get(idx)
        return el is not None and not el.failed

    def live_element_graph(self) -> dict[int, set[int]]:
        # the spare participates in the stack interconnect even while spare
        alive = {i for i, el in self.elements.items() if not el.failed}
        adj = {i: set() for i in alive}
        for a, b in self.ring_links:
            if a in alive and b in alive:
                adj[a].add(b)
                adj[b].add(a)
        return adj


@dataclass
class Link:
    a: PortRef
    b: PortRef
    state: str = "up"               # up | down
    capacity_class: str = "fast"    # fast | gigabit
    forced_down: bool = False       # operator / err-disable override

    @property
    def id(self) -> str:
        ends = sorted([str(self.a), str(self.b)])
        return f"{ends[0]}--{ends[1]}"

    def other(self, ref: PortRef) -> PortRef:
        return self.b if ref == self.a else self.a


@dataclass
class Jack:
    id: str
    room: str


@dataclass
class Room:
    id: str
    building: str = ""


@dataclass
class Host:
    id: str
    mac: str
    ip: str
    jack: str | None = None
    managed: str = "user"           # analyst | user
    rp: str = ""
    role: str = ""                  # e.g. ghost-server, ghost-router, dhcp-copy


@dataclass
class RouterBox:
    id: str
    pair: str                       # internal | external
    role: str                       # primary | secondary
    ups: str = ""
    alive: bool = True


# -- fault records -----------------------------------------------------------

@dataclass(frozen=True)
class LinkDown:
    link_id: str


@dataclass(frozen=True)
class LinkUp:
    link_id: str


@dataclass(frozen=True)
class StackElementFail:
    switch: str
    element: int


@dataclass(frozen=True)
class UpsFail:
    ups: str


@dataclass(frozen=True)
class RouterFail:
    router: str


class NetTopology:
    """Validated collection of plant entities plus link-state bookkeeping."""

    def __init__(self):
        self.vlans: dict[int, dict] = {}
        self.upses: set[str] = set()
        self.switches: dict[str, Switch] = {}
        self.links: dict[str, Link] = {}
        self.rooms: dict[str, Room] = {}
        self.jacks: dict[str, Jack] = {}
        self.patches: dict[str, PortRef] = {}     # jack id -> port
        self.hosts: dict[str, Host] = {}
        self.routers: dict[str, RouterBox] = {}
        self.gateways: dict[str, dict[int, str]] = {}  # pair -> vlan -> addr
        self._port_link: dict[PortRef, str] = {}
        self._port_jack: dict[PortRef, str] = {}
        self._link_observers: list = []
        # bumped on any change that can affect forwarding decisions;
        # lets the fabric cache flood sets between changes
        self.generation = 0

    def bump(self) -> None:
        self.generation += 1

    # -- lookups -------------------------------------------------------------

    def port(self, ref: PortRef) -> SwitchPort:
        sw = self.switches.get(ref.switch)
        if sw is None or (ref.unit, ref.port) not in sw.ports:
            raise UnknownTarget(f"no such port {ref}")
        return sw.ports[(ref.unit, ref.port)]

    def has_port(self, ref: PortRef) -> bool:
        sw = self.switches.get(ref.switch)
        return sw is not None and (ref.unit, ref.port) in sw.ports

    def link_for_port(self, ref: PortRef) -> Link | None:
        lid = self._port_link.get(ref)
        return self.links[lid] if lid else None

    def jack_for_port(self, ref: PortRef) -> str | None:
        return self._port_jack.get(ref)

    def host_on_port(self, ref: PortRef) -> Host | None:
        jack = self._port_jack.get(ref)
        if jack is None:
            return None
        for host in self.hosts.values():
            if host.jack == jack:
                return host
        return None

    def host_by_mac(self, mac: str) -> Host | None:
        for host in self.hosts.values():
            if host.mac == mac:
                return host
        return None

    def is_edge_port(self, ref: PortRef) -> bool:
        """Host-facing: no inter-switch link attached."""
        return self.link_for_port(ref) is None

    def link_effective_up(self, link: Link) -> bool:
        if link.state != "up" or link.forced_down:
            return False
        return self._endpoint_alive(link.a) and self._endpoint_alive(link.b)

    def _endpoint_alive(self, ref: PortRef) -> bool:
        sw = self.switches[ref.switch]
        return sw.element_alive(ref.unit)

    def up_links(self) -> list[Link]:
        return [l for l in self.links.values() if self.link_effective_up(l)]

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        macs: dict[str, str] = {}
        for sw in self.switches.values():
            if not sw.elements:
                sw.elements[1] = StackElement(1, ups=next(iter(self.upses), ""))
            if sw.kind == "core-stack" and not sw.elements:
                raise DanglingReference(f"core stack {sw.id} has no elements")
            for el in sw.elements.values():
                if el.ups and el.ups not in self.upses:
                    raise DanglingReference(
                        f"switch {sw.id} element {el.idx}: unknown UPS {el.ups}")
            for (unit, _), port in sw.ports.items():
                if unit not in sw.elements:
                    raise DanglingReference(
                        f"port {port.ref}: no stack element {unit} on {sw.id}")
                if port.mode == "access" and port.vlan not in self.vlans:
                    raise DanglingReference(
                        f"port {port.ref}: undeclared VLAN {port.vlan}")
            if sw.ring_links:
                self._check_ring(sw)
        seen_ports: set[PortRef] = set()
        for link in self.links.values():
            if link.a == link.b:
                raise DanglingReference(f"link {link.id}: self-loop")
            for ref in (link.a, link.b):
                if not self.has_port(ref):
                    raise DanglingReference(f"link endpoint {ref} missing")
                if ref in seen_ports:
                    raise DanglingReference(f"port {ref} on two links")
                sw = self.switches[ref.switch]
                if sw.spare_element is not None and ref.unit == sw.spare_element:
                    raise DanglingReference(
                        f"link {link.id}: spare element carries an active link")
                seen_ports.add(ref)
        for jack in self.jacks.values():
            if jack.room not in self.rooms:
                raise DanglingReference(f"jack {jack.id}: unknown room {jack.room}")
        port_served: set[PortRef] = set()
        for jack_id, ref in self.patches.items():
            if jack_id not in self.jacks:
                raise DanglingReference(f"patch: unknown jack {jack_id}")
            if not self.has_port(ref):
                raise DanglingReference(f"patch {jack_id}: unknown port {ref}")
            if ref in port_served:
                raise DanglingReference(f"port {ref} serves two jacks")
            port_served.add(ref)
        for host in self.hosts.values():
            if host.jack is not None and host.jack not in self.jacks:
                raise DanglingReference(f"host {host.id}: unknown jack {host.jack}")
            if host.managed == "analyst":
                prev = macs.get(host.mac)
                if prev is not None:
                    raise DuplicateMac(f"MAC {host.mac} on {prev} and {host.id}")
                macs[host.mac] = host.id
        for pair, gw in self.gateways.items():
            for vlan in gw:
                if vlan not in self.vlans:
                    raise DanglingReference(f"gateway {pair}: unknown VLAN {vlan}")

    def _check_ring(self, sw: Switch) -> None:
        """Fig-1 intent: the ring minus all elements of any one UPS feed
        must stay connected."""
        members = list(sw.elements)
        if not _connected(members, sw.ring_links):
            raise RingNotRedundant(f"{sw.id}: ring graph not connected")
        feeds = {el.ups for el in sw.elements.values()}
        for feed in feeds:
            rest = [i for i in members if sw.elements[i].ups != feed]
            if rest and not _connected(rest, sw.ring_links):
                raise RingNotRedundant(
                    f"{sw.id}: losing UPS {feed} partitions the ring")

    # -- link-state machinery --------------------------------------------------

    def add_link_observer(self, fn) -> None:
        """fn(link, new_effective_state: 'up'|'down', at) on every change."""
        self._link_observers.append(fn)

    def _notify(self, sim, link: Link, new_state: str) -> None:
        self.bump()
        sim.emit("LinkStateChange", {"link": link.id, "state": new_state})
        for fn in self._link_observers:
            fn(link, new_state, sim.clock)

    def set_link_state(self, sim, link: Link, up: bool, forced: bool = False) -> bool:
        """Returns True if the effective state changed."""
        before = self.link_effective_up(link)
        if forced:
            link.forced_down = not up
        else:
            link.state = "up" if up else "down"
        after = self.link_effective_up(link)
        if before != after:
            self._notify(sim, link, "up" if after else "down")
            return True
        return False

    # -- fault injection -------------------------------------------------------

    def inject_fault(self, sim, fault) -> list[str]:
        """Apply a fault now; returns ids of links whose state changed."""
        changed: list[str] = []
        if isinstance(fault, (LinkDown, LinkUp)):
            link = self.links.get(fault.link_id)
            if link is None:
                raise UnknownTarget(f"no link {fault.link_id}")
            if self.set_link_state(sim, link, isinstance(fault, LinkUp)):
                changed.append(link.id)
        elif isinstance(fault, StackElementFail):
            sw = self.switches.get(fault.switch)
            if sw is None or fault.element not in sw.elements:
                raise UnknownTarget(f"no element {fault.element} on {fault.switch}")
            changed += self._fail_elements(sim, [(sw, fault.element)])
        elif isinstance(fault, UpsFail):
            if fault.ups not in self.upses:
                raise UnknownTarget(f"no UPS {fault.ups}")
            victims = [
                (sw, idx)
                for sw in self.switches.values()
                for idx, el in sw.elements.items()
                if el.ups == fault.ups
            ]
            changed += self._fail_elements(sim, victims)
            for router in self.routers.values():
                if router.ups == fault.ups and router.alive:
                    router.alive = False
                    sim.emit("LinkStateChange",
                             {"router": router.id, "state": "down"})
        elif isinstance(fault, RouterFail):
            router = self.routers.get(fault.router)
            if router is None:
                raise UnknownTarget(f"no router {fault.router}")
            if router.alive:
                router.alive = False
                sim.emit("LinkStateChange",
                         {"router": router.id, "state": "down"})
        else:
            raise UnknownTarget(f"unknown fault {fault!r}")
        return changed

    def _fail_elements(self, sim, victims) -> list[str]:
        changed = []
        affected: list[Link] = []
        for sw, idx in victims:
            if not sw.elements[idx].failed:
                for link in self.links.values():
                    for ref in (link.a, link.b):
                        if ref.switch == sw.id and ref.unit == idx:
                            affected.append(link)
        pre = {l.id: self.link_effective_up(l) for l in affected}
        for sw, idx in victims:
            sw.elements[idx].failed = True
        for link in affected:
            if pre[link.id] and not self.link_effective_up(link):
                self._notify(sim, link, "down")
                changed.append(link.id)
        return changed

    def activate_spare(self, sim, switch_id: str, failed_element: int) -> Switch:
        """The spare stack element assumes the failed element's links."""
        sw = self.switches.get(switch_id)
        if sw is None:
            raise UnknownTarget(f"no switch {switch_id}")
        if sw.spare_element is None:
            raise NoSpare(f"{switch_id} has no spare element")
        el = sw.elements.get(failed_element)
        if el is None or not el.failed:
            raise ElementNotFailed(f"element {failed_element} is not failed")
        spare = sw.spare_element
        moved: list[Link] = []
        for link in self.links.values():
            for attr in ("a", "b"):
                ref = getattr(link, attr)
                if ref.switch == sw.id and ref.unit == failed_element:
                    new_ref = PortRef(sw.id, spare, ref.port)
                    old_port = sw.ports.pop((failed_element, ref.port), None)
                    if old_port is not None:
                        sw.ports[(spare, ref.port)] = replace(
                            old_port, ref=new_ref)
                    self._port_link.pop(ref, None)
                    self._port_link[new_ref] = link.id
                    setattr(link, attr, new_ref)
                    moved.append(link)
        sw.spare_element = None
        for link in moved:
            if self.link_effective_up(link):
                self._notify(sim, link, "up")
        sim.emit("CommandApplied",
                 {"op": "activate-spare", "switch": sw.id,
                  "failed": failed_element, "spare": spare})
        return sw

    # -- reachability oracle -----------------------------------------------------

    def reachable_switch_sets(self, forwarding=None) -> list[set[str]]:
        """Connected components at stack-element granularity.

        Nodes are access switches plus (stack, element) pairs; edges are
        live ring links and up (optionally forwarding) inter-switch links.
        Used by the UPS-resilience and reconvergence checks.
        """
        nodes: set = set()
        adj: dict = {}

        def node_for(ref: PortRef):
            sw = self.switches[ref.switch]
            if len(sw.elements) > 1:
                return (sw.id, ref.unit)
            return sw.id

        def add_edge(u, v):
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)

        for sw in self.switches.values():
            if len(sw.elements) > 1:
                for idx, el in sw.elements.items():
                    if not el.failed:
                        nodes.add((sw.id, idx))
                for a, b in sw.ring_links:
                    if sw.element_alive(a) and sw.element_alive(b):
                        add_edge((sw.id, a), (sw.id, b))
            else:
                if any(not el.failed for el in sw.elements.values()):
                    nodes.add(sw.id)
        for link in self.links.values():
            if not self.link_effective_up(link):
                continue
            if forwarding is not None and not forwarding(link):
                continue
            add_edge(node_for(link.a), node_for(link.b))
        nodes |= set(adj)
        components = []
        seen: set = set()
        for start in sorted(nodes, key=str):
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                u = stack.pop()
                for v in adj.get(u, ()):
                    if v not in comp:
                        comp.add(v)
                        stack.append(v)
            seen |= comp
            components.append({n if isinstance(n, str) else n[0] for n in comp})
        return components

    def all_switches_mutually_reachable(self, switches=None, forwarding=None) -> bool:
        comps = self.reachable_switch_sets(forwarding=forwarding)
        wanted = set(switches) if switches else set(self.switches)
        return any(wanted <= comp for comp in comps)

    # -- exports -------------------------------------------------------------------

    def export_nodes_edges(self) -> dict:
        """Node/edge document for the console: switches, links, states, STP."""
        nodes = [
            {
                "id": sw.id,
                "kind": sw.kind,
                "building": sw.building,
                "elements": len(sw.elements),
            }
            for sw in sorted(self.switches.values(), key=lambda s: s.id)
        ]
        edges = []
        for link in sorted(self.links.values(), key=lambda l: l.id):
            a_stp = self.port(link.a).stp
            b_stp = self.port(link.b).stp
            up = self.link_effective_up(link)
            if not up:
                state = "down"
            elif a_stp.state == "forwarding" and b_stp.state == "forwarding":
                state = "forwarding"
            else:
                state = "blocking"
            edges.append({
                "id": link.id,
                "a": str(link.a),
                "b": str(link.b),
                "state": state,
                "class": link.capacity_class,
            })
        return {"nodes": nodes, "edges": edges}

    def snapshot_state(self) -> dict:
        ports = {}
        for sw in self.switches.values():
            for port in sw.ports.values():
                sec = port.security
                ports[str(port.ref)] = {
                    "mode": port.mode,
                    "vlan": port.vlan,
                    "description": port.description,
                    "security": sec.enabled,
                    "secmode": sec.mode,
                    "sticky": list(sec.sticky),
                    "violations": sec.violation_count,
                    "err_disabled": sec.err_disabled,
                    "stp_role": port.stp.role,
                    "stp_state": port.stp.state,
                    "portfast": port.stp.portfast,
                }
        return {
            "vlans": {str(k): v for k, v in sorted(self.vlans.items())},
            "ports": ports,
            "links": {
                l.id: ("up" if self.link_effective_up(l) else "down")
                for l in self.links.values()
            },
            "routers": {r.id: r.alive for r in self.routers.values()},
        }


def _connected(members, edges) -> bool:
    if not members:
        return False
    members = set(members)
    adj = {m: set() for m in members}
    for a, b in edges:
        if a in members and b in members:
            adj[a].add(b)
            adj[b].add(a)
    seen = {next(iter(members))}
    stack = list(seen)
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == members


# -- config parsing ---------------------------------------------------------------


def load_topology(text: str) -> NetTopology:
    """Parse and validate a topology config; raises ParseError and friends."""
    topo = NetTopology()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        words = line.split()
        kind, args = words[0], words[1:]
        try:
            _DIRECTIVES[kind](topo, args)
        except KeyError:
            raise ParseError(line_no, f"unknown directive {kind!r}")
        except ParseError:
            raise
        except Exception as exc:
            raise ParseError(line_no, str(exc))
    topo.validate()
    for link in topo.links.values():
        topo._port_link[link.a] = link.id
        topo._port_link[link.b] = link.id
    for jack_id, ref in topo.patches.items():
        topo._port_jack[ref] = jack_id
    return topo


def _opts(args, positional: int):
    pos = args[:positional]
    if len(pos) < positional:
        raise ValueError("missing arguments")
    opts = {}
    for token in args[positional:]:
        if "=" not in token:
            raise ValueError(f"expected key=value, got {token!r}")
        key, value = token.split("=", 1)
        opts[key] = value
    return pos, opts


def _d_vlan(topo, args):
    (vid,), opts = _opts(args, 1)
    vid = int(vid)
    if not 1 <= vid <= 4094:
        raise ValueError(f"VLAN {vid} out of range 1..4094")
    topo.vlans[vid] = {
        "name": opts.get("name", f"vlan{vid}"),
        "subnet": opts.get("subnet"),
        "purpose": opts.get("purpose", ""),
        "owner": opts.get("owner", ""),
    }


def _d_ups(topo, args):
    (name,), _ = _opts(args, 1)
    topo.upses.add(name)


def _d_switch(topo, args):
    (sid,), opts = _opts(args, 1)
    if sid in topo.switches:
        raise ValueError(f"duplicate switch {sid}")
    topo.switches[sid] = Switch(
        id=sid,
        kind=opts.get("kind", "access"),
        mac=opts.get("mac", f"02:00:00:00:00:{len(topo.switches) + 1:02x}"),
        priority=int(opts.get("priority", 32768)),
        building=opts.get("building", ""),
    )


def _d_element(topo, args):
    (sid, idx), opts = _opts(args, 2)
    sw = topo.switches[sid]
    sw.elements[int(idx)] = StackElement(int(idx), ups=opts.get("ups", ""))


def _d_ring(topo, args):
    sid = args[0]
    sw = topo.switches[sid]
    for chunk in " ".join(args[1:]).replace(",", " ").split():
        a, b = chunk.split("-")
        sw.ring_links.append((int(a), int(b)))


def _d_spare(topo, args):
    (sid, idx), _ = _opts(args, 2)
    topo.switches[sid].spare_element = int(idx)


def _d_port(topo, args):
    (ref_s,), opts = _opts(args, 1)
    ref = PortRef.parse(ref_s)
    sw = topo.switches[ref.switch]
    allowed = ALL_VLANS
    if "allowed" in opts and opts["allowed"] != "all":
        allowed = frozenset(int(v) for v in opts["allowed"].split(","))
    security = PortSecurity(
        enabled=opts.get("security", "off") == "on",
        max_macs=int(opts.get("maxmacs", 1)),
        mode=opts.get("secmode", "restrict"),
    )
    port = SwitchPort(
        ref=ref,
        mode=opts.get("mode", "access"),
        vlan=int(opts.get("vlan", 1)),
        allowed=allowed,
        description=opts.get("description", "").replace("_", " "),
        security=security,
        stp=StpPortState(portfast=opts.get("portfast", "no") == "yes"),
    )
    sw.ports[(ref.unit, ref.port)] = port


def _d_link(topo, args):
    (a_s, b_s), opts = _opts(args, 2)
    link = Link(
        a=PortRef.parse(a_s),
        b=PortRef.parse(b_s),
        state=opts.get("state", "up"),
        capacity_class=opts.get("class", "fast"),
    )
    if link.id in topo.links:
        raise ValueError(f"duplicate link {link.id}")
    topo.links[link.id] = link


def _d_room(topo, args):
    (rid,), opts = _opts(args, 1)
    topo.rooms[rid] = Room(rid, building=opts.get("building", ""))


def _d_jack(topo, args):
    (jid,), opts = _opts(args, 1)
    topo.jacks[jid] = Jack(jid, room=opts["room"])


def _d_patch(topo, args):
    (jid, ref_s), _ = _opts(args, 2)
    if jid in topo.patches:
        raise DanglingReference(f"jack {jid} patched twice")
    topo.patches[jid] = PortRef.parse(ref_s)


def _d_host(topo, args):
    (hid,), opts = _opts(args, 1)
    topo.hosts[hid] = Host(
        id=hid,
        mac=opts["mac"].lower(),
        ip=opts["ip"],
        jack=opts.get("jack"),
        managed=opts.get("managed", "user"),
        rp=opts.get("rp", ""),
        role=opts.get("role", ""),
    )


def _d_router(topo, args):
    (rid,), opts = _opts(args, 1)
    topo.routers[rid] = RouterBox(
        id=rid, pair=opts["pair"], role=opts["role"], ups=opts.get("ups", ""))


def _d_gateway(topo, args):
    (pair, vlan, addr), _ = _opts(args, 3)
    topo.gateways.setdefault(pair, {})[int(vlan)] = addr


_DIRECTIVES = {
    "vlan": _d_vlan,
    "ups": _d_ups,
    "switch": _d_switch,
    "element": _d_element,
    "ring": _d_ring,
    "spare": _d_spare,
    "port": _d_port,
    "link": _d_link,
    "room": _d_room,
    "jack": _d_jack,
    "patch": _d_patch,
    "host": _d_host,
    "router": _d_router,
    "gateway": _d_gateway,
}

"""Frame forwarding: per-VLAN MAC learning, access/trunk semantics with
campus-wide trunking, flooding, and sticky-MAC port security with
shutdown/restrict/protect violation modes.

A broadcast in VLAN X is delivered to exactly the up, forwarding,
X-member edge ports reachable over forwarding inter-switch links, minus
the ingress port; frames never cross VLANs without a router.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import simcore
from .errors import TrunkPort, UnknownPort, UnknownVlan, VlanNotAllowed
from .topology import ALL_VLANS, NetTopology, PortRef

BROADCAST = "ff:ff:ff:ff:ff:ff"

FDB_TTL = 300 * simcore.NS_PER_SEC
# restrict mode re-alerts at most once per port per window
VIOLATION_ALERT_WINDOW = 60 * simcore.NS_PER_SEC


@dataclass(frozen=True)
class Frame:
    src: str
    dst: str = BROADCAST
    vlan: int | None = None      # None on access ingress: derived from port
    kind: str = "unicast"        # unicast|broadcast|multicast-ghost|bpdu|mgmt-handshake
    size_bytes: int = 64


@dataclass
class FdbEntry:
    port: PortRef
    last_seen: simcore.SimTime


@dataclass
class Violation:
    at: simcore.SimTime
    port: PortRef
    offending_mac: str
    mode: str
    action: str                  # shutdown | drop
    alerted: bool


class SwitchFabric:
    """Shared forwarding plane over a topology with converged STP state."""

    def __init__(self, sim, topo: NetTopology, stp=None, log_frames: bool = True):
        self.sim = sim
        self.topo = topo
        self.stp = stp
        self.log_frames = log_frames
        self.fdb: dict[tuple[int, str], FdbEntry] = {}
        self.drop_counts: dict[str, int] = {}
        self.violation_listeners: list = []
        self.ghost_byte_listeners: list = []
        # edge ports forced down (err-disable or operator action)
        self._edge_down: set[PortRef] = set()
        # flood sets are stable between topology/STP/VLAN changes
        self._flood_cache: dict[tuple[str, int], set[PortRef]] = {}
        self._flood_cache_gen = -1

    # -- port admin ------------------------------------------------------------

    def set_port_vlan(self, ref: PortRef, vlan: int) -> None:
        if vlan not in self.topo.vlans:
            raise UnknownVlan(f"VLAN {vlan} not registered")
        port = self.topo.port(ref)
        if port.mode != "access":
            raise TrunkPort(f"{ref} is a trunk port")
        port.vlan = vlan
        self.topo.bump()
        self.flush_port(ref)

    def clear_sticky(self, ref: PortRef) -> None:
        """Empty the sticky set and restore an err-disabled port to service;
        the violation history stays in the event log."""
        if not self.topo.has_port(ref):
            raise UnknownPort(str(ref))
        port = self.topo.port(ref)
        sec = port.security
        sec.sticky.clear()
        if sec.err_disabled:
            sec.err_disabled = False
            self._edge_down.discard(ref)
            self.topo.bump()
            self.sim.emit("LinkStateChange", {"port": str(ref), "state": "up"})
            if self.stp is not None and self.topo.is_edge_port(ref):
                self.stp.edge_link_up(ref)

    def port_is_up(self, ref: PortRef) -> bool:
        port = self.topo.port(ref)
        if port.security.err_disabled or ref in self._edge_down:
            return False
        link = self.topo.link_for_port(ref)
        if link is not None:
            return self.topo.link_effective_up(link)
        return self.topo.switches[ref.switch].element_alive(ref.unit)

    def flush_port(self, ref: PortRef) -> None:
        stale = [k for k, e in self.fdb.items() if e.port == ref]
        for k in stale:
            del self.fdb[k]

    # -- forwarding --------------------------------------------------------------

    def ingress(self, ref: PortRef, frame: Frame,
                at: simcore.SimTime | None = None) -> list[PortRef]:
        """Process a frame arriving on `ref`; returns the delivery set."""
        at = self.sim.clock if at is None else at
        port = self.topo.port(ref)
        if not self.port_is_up(ref):
            return []

        vlan = frame.vlan
        if port.mode == "access":
            if vlan is None:
                vlan = port.vlan
            elif vlan != port.vlan:
                return self._drop(ref, "VlanNotAllowed")
        else:
            if vlan is None or not port.admits(vlan):
                return self._drop(ref, "VlanNotAllowed")

        sec = port.security
        if sec.enabled and frame.kind != "bpdu":
            if frame.src not in sec.sticky:
                if len(sec.sticky) < sec.max_macs:
                    sec.sticky.append(frame.src)
                else:
                    self.apply_violation(ref, frame.src, at)
                    return []

        self._learn(vlan, frame.src, ref, at)

        deliveries = self._resolve(ref, vlan, frame, at)
        if self.log_frames:
            self.sim.emit("FrameArrival", {
                "port": str(ref), "vlan": vlan, "src": frame.src,
                "dst": frame.dst, "kind": frame.kind,
                "delivered": len(deliveries),
            })
        if frame.kind == "multicast-ghost" and self.ghost_byte_listeners:
            for fn in self.ghost_byte_listeners:
                fn(vlan, deliveries, frame.size_bytes)
        return deliveries

    def _resolve(self, ingress_ref: PortRef, vlan: int, frame: Frame,
                 at) -> list[PortRef]:
        if frame.dst != BROADCAST and frame.kind not in (
                "broadcast", "multicast-ghost"):
            entry = self.fdb.get((vlan, frame.dst))
            if entry is not None and at - entry.last_seen <= FDB_TTL \
                    and entry.port != ingress_ref:
                egress = entry.port
                eport = self.topo.port(egress)
                if self.port_is_up(egress) and eport.admits(vlan) and \
                        eport.stp.state == "forwarding" and \
                        egress in self._vlan_flood_set(ingress_ref, vlan):
                    return [egress]
        return sorted(self._vlan_flood_set(ingress_ref, vlan))

    def _vlan_flood_set(self, ingress_ref: PortRef, vlan: int) -> set[PortRef]:
        """Edge ports in `vlan` reachable from the ingress switch across
        forwarding inter-switch links that admit the VLAN."""
        if self._flood_cache_gen != self.topo.generation:
            self._flood_cache.clear()
            self._flood_cache_gen = self.topo.generation
        cached = self._flood_cache.get((ingress_ref.switch, vlan))
        if cached is not None:
            return cached - {ingress_ref}
        start = ingress_ref.switch
        visited = {start}
        stack = [start]
        while stack:
            sw_id = stack.pop()
            sw = self.topo.switches[sw_id]
            for port in sw.ports.values():
                link = self.topo.link_for_port(port.ref)
                if link is None:
                    continue
                if not self.topo.link_effective_up(link):
                    continue
                other_ref = link.other(port.ref)
                other = self.topo.port(other_ref)
                if port.stp.state != "forwarding" or \
                        other.stp.state != "forwarding":
                    continue
                if not port.admits(vlan) or not other.admits(vlan):
                    continue
                if other_ref.switch not in visited:
                    visited.add(other_ref.switch)
                    stack.append(other_ref.switch)
        out: set[PortRef] = set()
        for sw_id in visited:
            sw = self.topo.switches[sw_id]
            for port in sw.ports.values():
                if self.topo.link_for_port(port.ref) is not None:
                    continue  # inter-switch, not a delivery point
                if port.mode == "access" and port.vlan != vlan:
                    continue
                if port.mode == "trunk" and not port.admits(vlan):
                    continue
                if port.stp.state != "forwarding":
                    continue
                if not self.port_is_up(port.ref):
                    continue
                out.add(port.ref)
        self._flood_cache[(ingress_ref.switch, vlan)] = out
        return out - {ingress_ref}

    def _learn(self, vlan: int, mac: str, ref: PortRef, at) -> None:
        if mac == BROADCAST:
            return
        self.fdb[(vlan, mac)] = FdbEntry(port=ref, last_seen=at)

    def _drop(self, ref: PortRef, reason: str) -> list[PortRef]:
        key = f"{ref}:{reason}"
        self.drop_counts[key] = self.drop_counts.get(key, 0) + 1
        return []

    # -- port security -------------------------------------------------------------

    def apply_violation(self, ref: PortRef, offending_mac: str,
                        at: simcore.SimTime | None = None) -> str:
        """Handle a frame from a non-sticky MAC on a full secured port."""
        at = self.sim.clock if at is None else at
        port = self.topo.port(ref)
        sec = port.security
        sec.violation_count += 1
        self._drop(ref, "SecurityViolation")
        if sec.mode == "shutdown":
            action, alerted = "shutdown", True
            sec.err_disabled = True
            self._edge_down.add(ref)
            port.stp.state = "blocking"
            self.topo.bump()
            self.sim.emit("LinkStateChange",
                          {"port": str(ref), "state": "down",
                           "reason": "err-disabled"})
        elif sec.mode == "restrict":
            action = "drop"
            alerted = (sec.last_alert_at is None
                       or at - sec.last_alert_at >= VIOLATION_ALERT_WINDOW)
            if alerted:
                sec.last_alert_at = at
        else:  # protect: drop and count, no alert ever
            action, alerted = "drop", False
        violation = Violation(at=at, port=ref, offending_mac=offending_mac,
                              mode=sec.mode, action=action, alerted=alerted)
        if alerted:
            self.sim.emit("AlertRaised", {
                "alert": "swpvio", "port": str(ref), "mac": offending_mac,
                "mode": sec.mode,
            })
        for fn in self.violation_listeners:
            fn(violation)
        return action

    # -- exports ------------------------------------------------------------------

    def port_table(self, switch: str | None = None) -> list[dict]:
        rows = []
        for sw in sorted(self.topo.switches.values(), key=lambda s: s.id):
            if switch is not None and sw.id != switch:
                continue
            for (unit, pnum), port in sorted(sw.ports.items()):
                sec = port.security
                rows.append({
                    "ref": str(port.ref),
                    "mode": port.mode,
                    "vlan": port.vlan if port.mode == "access" else None,
                    "description": port.description,
                    "security": sec.enabled,
                    "secmode": sec.mode if sec.enabled else None,
                    "sticky": list(sec.sticky),
                    "violations": sec.violation_count,
                    "err_disabled": sec.err_disabled,
                    "up": self.port_is_up(port.ref),
                    "stp_role": port.stp.role,
                    "stp_state": port.stp.state,
                })
        return rows

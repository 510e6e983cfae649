"""Redundant router pairs: inter-VLAN forwarding behind the firewall,
connection tracking, periodic state replication to the secondary, and
failover that keeps previously synced sessions alive.

Failover detection is heartbeat based (3 missed 1-second beats), so
sessions younger than one sync interval may be seen as NEW by the
secondary; that loss window is deliberate.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field, replace

from . import simcore
from .errors import BothDown, NoRoute, PeerDown
from .fwengine import FirewallEngine, NatTable, Packet, Verdict

HEARTBEAT_INTERVAL = 1 * simcore.NS_PER_SEC
HEARTBEAT_MISSES = 3
DEFAULT_SYNC_INTERVAL = 10 * simcore.NS_PER_SEC

IDLE_TIMEOUT = {
    "NEW": 60 * simcore.NS_PER_SEC,
    "ESTABLISHED": 600 * simcore.NS_PER_SEC,
}


@dataclass
class ConnTrackEntry:
    tuple: tuple                 # (src, sport, dst, dport, proto)
    state: str                   # NEW | ESTABLISHED | CLOSED
    last_seen: simcore.SimTime
    nat_map: str | None = None

    def expired(self, at: simcore.SimTime) -> bool:
        ttl = IDLE_TIMEOUT.get(self.state, IDLE_TIMEOUT["NEW"])
        return at - self.last_seen > ttl


class ConnTrackTable:
    def __init__(self):
        self.entries: dict[tuple, ConnTrackEntry] = {}

    def lookup(self, key: tuple, at: simcore.SimTime) -> ConnTrackEntry | None:
        entry = self.entries.get(key)
        if entry is None:
            reverse = (key[2], key[3], key[0], key[1], key[4])
            entry = self.entries.get(reverse)
        if entry is not None and entry.expired(at):
            return None
        return entry

    def note(self, key: tuple, at: simcore.SimTime) -> ConnTrackEntry:
        """Forward-direction packet: create NEW or refresh; a packet in the
        reverse direction of an existing entry promotes it to ESTABLISHED."""
        reverse = (key[2], key[3], key[0], key[1], key[4])
        entry = self.entries.get(key)
        if entry is None and reverse in self.entries:
            entry = self.entries[reverse]
            if not entry.expired(at):
                entry.state = "ESTABLISHED"
            else:
                entry = None
        if entry is None or entry.expired(at):
            entry = ConnTrackEntry(tuple=key, state="NEW", last_seen=at)
            self.entries[key] = entry
        entry.last_seen = at
        return entry

    def established(self, at: simcore.SimTime) -> list[ConnTrackEntry]:
        return [e for e in self.entries.values()
                if e.state == "ESTABLISHED" and not e.expired(at)]

    def dump(self, at: simcore.SimTime) -> list[dict]:
        rows = []
        for entry in sorted(self.entries.values(), key=lambda e: e.tuple):
            rows.append({
                "tuple": list(entry.tuple),
                "state": entry.state,
                "age_s": (at - entry.last_seen) // simcore.NS_PER_SEC,
                "expired": entry.expired(at),
            })
        return rows


@dataclass
class SyncBatch:
    from_router: str
    to_router: str
    entries: list[ConnTrackEntry]
    as_of: simcore.SimTime


@dataclass
class RouterNode:
    id: str
    alive: bool = True
    conntrack: ConnTrackTable = field(default_factory=ConnTrackTable)


class RouterPair:
    """One redundant pair (internal or external) with a shared firewall
    profile; all inter-VLAN traffic crosses a pair."""

    def __init__(self, sim, name: str, primary: str, secondary: str,
                 vlan_subnets: dict[int, str], firewall: FirewallEngine,
                 nat: NatTable | None = None,
                 sync_interval: int = DEFAULT_SYNC_INTERVAL,
                 default_route: bool = False):
        self.sim = sim
        self.name = name
        self.primary = RouterNode(primary)
        self.secondary = RouterNode(secondary)
        self.active = self.primary
        self.vlan_subnets = {
            vlan: ipaddress.ip_network(net)
            for vlan, net in vlan_subnets.items() if net
        }
        self.firewall = firewall
        self.nat = nat
        self.sync_interval = sync_interval
        self.default_route = default_route
        self._last_heartbeat = sim.clock
        self._monitoring = False

    # -- periodic machinery -----------------------------------------------------

    def start(self) -> None:
        if self._monitoring:
            return
        self._monitoring = True
        self.sim.after(self.sync_interval, "TimerExpiry",
                       {"timer": f"{self.name}-sync"}, self._sync_tick)
        self.sim.after(HEARTBEAT_INTERVAL, "TimerExpiry",
                       {"timer": f"{self.name}-heartbeat"}, self._heartbeat)

    def _sync_tick(self, _event) -> None:
        try:
            self.sync()
        except PeerDown:
            pass
        self.sim.after(self.sync_interval, "TimerExpiry",
                       {"timer": f"{self.name}-sync"}, self._sync_tick)

    def _heartbeat(self, _event) -> None:
        now = self.sim.clock
        if self.primary.alive:
            self._last_heartbeat = now
        elif self.active is self.primary and \
                now - self._last_heartbeat >= HEARTBEAT_MISSES * HEARTBEAT_INTERVAL:
            self.failover()
        self.sim.after(HEARTBEAT_INTERVAL, "TimerExpiry",
                       {"timer": f"{self.name}-heartbeat"}, self._heartbeat)

    # -- operations ----------------------------------------------------------------

    def sync(self) -> SyncBatch:
        """Replicate ESTABLISHED entries from primary to secondary."""
        if not self.primary.alive or not self.secondary.alive:
            raise PeerDown(f"{self.name}: peer down, sync skipped")
        now = self.sim.clock
        batch = SyncBatch(
            from_router=self.primary.id,
            to_router=self.secondary.id,
            entries=[replace(e) for e in self.primary.conntrack.established(now)],
            as_of=now,
        )
        for entry in batch.entries:
            self.secondary.conntrack.entries[entry.tuple] = replace(entry)
        self.sim.emit("TimerExpiry", {
            "timer": f"{self.name}-sync-applied", "entries": len(batch.entries)})
        return batch

    def failover(self) -> str:
        """Promote the secondary; synced ESTABLISHED sessions continue."""
        if not self.secondary.alive:
            self.sim.emit("AlertRaised",
                          {"alert": "routing-halted", "pair": self.name})
            raise BothDown(f"{self.name}: both routers down")
        self.active = self.secondary
        self.sim.emit("AlertRaised", {
            "alert": "failover", "pair": self.name,
            "active": self.secondary.id})
        return self.secondary.id

    def failback(self) -> str:
        """Manual: return ownership to a recovered primary."""
        if not self.primary.alive:
            raise PeerDown(f"{self.name}: primary still down")
        self.active = self.primary
        self._last_heartbeat = self.sim.clock
        self.sim.emit("AlertRaised", {
            "alert": "failback", "pair": self.name, "active": self.primary.id})
        return self.primary.id

    def mark_router_state(self, router_id: str, alive: bool) -> None:
        for node in (self.primary, self.secondary):
            if node.id == router_id:
                node.alive = alive

    # -- routing ---------------------------------------------------------------------

    def vlan_for(self, addr: str) -> int | None:
        ip = ipaddress.ip_address(addr)
        for vlan, net in self.vlan_subnets.items():
            if ip in net:
                return vlan
        return None

    def route(self, pkt: Packet, vlan_in: int,
              sport: int = 0) -> tuple[int | None, Verdict]:
        """Forward across VLANs: conntrack state, firewall verdict, NAT.

        Returns (vlan_out, verdict); vlan_out None means the packet left
        for the upstream edge (external pair only).
        """
        now = self.sim.clock
        if not self.active.alive:
            # detection gap: the dead router blackholes until heartbeats miss
            self.sim.emit("AlertRaised", {
                "alert": "blackhole", "pair": self.name,
                "router": self.active.id})
            return None, Verdict("DROP")
        vlan_out = self.vlan_for(pkt.dst)
        if vlan_out is None and not self.default_route:
            self.sim.emit("AlertRaised", {
                "alert": "no-route", "pair": self.name, "dst": pkt.dst})
            raise NoRoute(f"{self.name}: unknown subnet for {pkt.dst}")
        table = self.active.conntrack
        key = (pkt.src, sport, pkt.dst, pkt.dport or 0, pkt.proto)
        existing = table.lookup(key, now)
        state = existing.state if existing is not None else "NEW"
        pkt = replace(pkt, conn_state=state)
        verdict, _trace = self.firewall.evaluate(pkt, at=now)
        if verdict.action == "ACCEPT":
            entry = table.note(key, now)
            if verdict.snat_to is not None and self.nat is not None:
                entry.nat_map = verdict.snat_to
                self.nat.apply(pkt, verdict)
        return vlan_out, verdict

    def conntrack_dump(self) -> list[dict]:
        return self.active.conntrack.dump(self.sim.clock)

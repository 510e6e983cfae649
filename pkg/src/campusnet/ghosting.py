"""Ghosting orchestration: batch-move member ports into a per-analyst
ghost VLAN served by a dedicated server, simulate the image broadcast as
VLAN-scoped chunked traffic, verify isolation, and restore the original
VLANs on teardown.

Two servers never share a ghost VLAN, and no port belongs to two active
sessions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    EmptySession,
    PortAlreadyGhosting,
    SessionNotActive,
    TwoServersOneVlan,
    UnknownTarget,
    UnknownVlan,
)
from .l2switch import Frame, SwitchFabric
from .topology import NetTopology, PortRef

DEFAULT_CHUNK_BYTES = 8192


@dataclass
class GhostSession:
    id: int
    analyst: str
    ghost_vlan: int
    server: str                          # host id of the ghost server
    members: list[tuple[PortRef, int]]   # (port, original_vlan)
    status: str = "active"               # active | torn_down
    bytes_total: int = 0
    received: dict[str, int] = field(default_factory=dict)  # port -> bytes


class GhostRegistry:
    """Active sessions plus the ghost-VLAN ownership map."""

    def __init__(self, sim, topo: NetTopology, fabric: SwitchFabric):
        self.sim = sim
        self.topo = topo
        self.fabric = fabric
        self.sessions: dict[int, GhostSession] = {}
        self._next_id = 0
        self._stray_ghost_bytes: dict[str, int] = {}
        fabric.ghost_byte_listeners.append(self._account)

    # -- session lifecycle ----------------------------------------------------

    def start_session(self, analyst: str, ghost_vlan: int, server: str,
                      member_ports: list[PortRef]) -> GhostSession:
        if ghost_vlan not in self.topo.vlans:
            raise UnknownVlan(f"ghost VLAN {ghost_vlan} not registered")
        if server not in self.topo.hosts:
            raise UnknownTarget(f"no such host {server}")
        if not member_ports:
            raise EmptySession("no member ports")
        for session in self.active_sessions():
            if session.ghost_vlan == ghost_vlan:
                raise TwoServersOneVlan(
                    f"VLAN {ghost_vlan} already served by {session.server}")
        busy = {
            port
            for session in self.active_sessions()
            for port, _ in session.members
        }
        for ref in member_ports:
            if ref in busy:
                raise PortAlreadyGhosting(str(ref))
        members = []
        for ref in member_ports:
            port = self.topo.port(ref)
            members.append((ref, port.vlan))
        # originals recorded; now move in batch
        for ref, _orig in members:
            self.fabric.set_port_vlan(ref, ghost_vlan)
        server_port = self._server_port(server)
        server_orig = self.topo.port(server_port).vlan
        self.fabric.set_port_vlan(server_port, ghost_vlan)
        members.append((server_port, server_orig))
        self._next_id += 1
        session = GhostSession(
            id=self._next_id, analyst=analyst, ghost_vlan=ghost_vlan,
            server=server, members=members)
        self.sessions[session.id] = session
        self.sim.emit("CommandApplied", {
            "op": "ghost-start", "session": session.id, "analyst": analyst,
            "vlan": ghost_vlan, "members": len(member_ports)})
        return session

    def run_distribution(self, session: GhostSession, image_bytes: int,
                         chunk_bytes: int = DEFAULT_CHUNK_BYTES) -> dict:
        """Broadcast the image into the ghost VLAN; returns the per-member
        delivery report.  Byte accounting is exact: the final chunk carries
        the remainder."""
        if session.status != "active":
            raise SessionNotActive(f"session {session.id}")
        session.bytes_total += image_bytes
        server_host = self.topo.hosts[session.server]
        server_port = self._server_port(session.server)
        full, rest = divmod(image_bytes, chunk_bytes)
        sizes = [chunk_bytes] * full + ([rest] if rest else [])
        for size in sizes:
            frame = Frame(src=server_host.mac, kind="multicast-ghost",
                          size_bytes=size)
            self.fabric.ingress(server_port, frame)
        self.sim.emit("CommandApplied", {
            "op": "ghost-distribute", "session": session.id,
            "bytes": image_bytes, "chunks": len(sizes)})
        return self.delivery_report(session)

    def teardown(self, session: GhostSession) -> list[PortRef]:
        """Exact inverse of start_session on VLAN assignments; idempotent."""
        if session.status == "torn_down":
            return []
        restored = []
        for ref, original in session.members:
            self.fabric.set_port_vlan(ref, original)
            restored.append(ref)
        session.status = "torn_down"
        self.sim.emit("CommandApplied",
                      {"op": "ghost-teardown", "session": session.id})
        return restored

    # -- accounting -----------------------------------------------------------

    def _account(self, vlan: int, deliveries, size_bytes: int) -> None:
        session = next(
            (s for s in self.active_sessions() if s.ghost_vlan == vlan), None)
        member_ports = {str(p) for p, _ in session.members} if session else set()
        for ref in deliveries:
            key = str(ref)
            if session is not None and key in member_ports:
                session.received[key] = session.received.get(key, 0) + size_bytes
            else:
                self._stray_ghost_bytes[key] = (
                    self._stray_ghost_bytes.get(key, 0) + size_bytes)

    def stray_ghost_bytes(self) -> dict[str, int]:
        """Ghost bytes seen by any port outside the owning session; the
        isolation invariant requires this to stay empty."""
        return dict(self._stray_ghost_bytes)

    def delivery_report(self, session: GhostSession) -> dict:
        server_port = str(self._server_port(session.server))
        return {
            "session": session.id,
            "analyst": session.analyst,
            "vlan": session.ghost_vlan,
            "bytes_total": session.bytes_total,
            "members": {
                str(ref): session.received.get(str(ref), 0)
                for ref, _ in session.members
                if str(ref) != server_port
            },
        }

    def active_sessions(self) -> list[GhostSession]:
        return [s for s in self.sessions.values() if s.status == "active"]

    def active_ghost_vlans(self) -> set[int]:
        return {s.ghost_vlan for s in self.active_sessions()}

    # -- manifests --------------------------------------------------------------

    def _server_port(self, host_id: str) -> PortRef:
        host = self.topo.hosts[host_id]
        if host.jack is None or host.jack not in self.topo.patches:
            raise UnknownTarget(f"ghost server {host_id} has no patched jack")
        return self.topo.patches[host.jack]

    def start_from_manifest(self, text: str) -> GhostSession:
        """Manifest grammar (one per line):

            analyst <name>
            vlan <ghost-vlan>
            server <host-id>
            member <port-ref | jack:<jack-id> | host:<host-id>>
        """
        analyst = server = None
        vlan = None
        ports: list[PortRef] = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition(" ")
            value = value.strip()
            if key == "analyst":
                analyst = value
            elif key == "vlan":
                vlan = int(value)
            elif key == "server":
                server = value
            elif key == "member":
                ports.append(self._resolve_member(value))
            else:
                raise UnknownTarget(f"bad manifest line {line!r}")
        if analyst is None or vlan is None or server is None:
            raise UnknownTarget("manifest missing analyst/vlan/server")
        return self.start_session(analyst, vlan, server, ports)

    def _resolve_member(self, spec: str) -> PortRef:
        if spec.startswith("jack:"):
            jack = spec[5:]
            if jack not in self.topo.patches:
                raise UnknownTarget(f"jack {jack} unpatched")
            return self.topo.patches[jack]
        if spec.startswith("host:"):
            host = self.topo.hosts.get(spec[5:])
            if host is None or host.jack is None:
                raise UnknownTarget(f"host {spec[5:]} not wired")
            self.sim.emit("CommandApplied", {
                "op": "ghost-member-resolved", "host": host.id,
                "jack": host.jack})
            return self.topo.patches[host.jack]
        return PortRef.parse(spec)

"""Security and health observers over the event log and flow stream:
swpvio alert feed, MAC-spoof detection from link-flap signatures, and
top-talker bandwidth reports with patch-site exemptions feeding choke
recommendations.

Detectors are pure consumers; they run against snapshots, logs, and flow
records, never against live event-loop state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import simcore
from .fwengine import ChokeEntry, PatchSiteList
from .topology import PortRef

# a managed desktop is expected to emit its management handshake within
# this window of link-up; silence afterwards is the spoof signal
HANDSHAKE_WINDOW = 120 * simcore.NS_PER_SEC

DEFAULT_REPORT_WINDOW = 24 * 3600 * simcore.NS_PER_SEC


@dataclass(frozen=True)
class LinkFlapSignature:
    port: PortRef
    down_at: simcore.SimTime
    up_at: simcore.SimTime
    post_up_macs: tuple[str, ...]
    handshake_seen: bool

    def __post_init__(self):
        if self.up_at <= self.down_at:
            raise ValueError("up_at must be after down_at")


@dataclass(frozen=True)
class SpoofAlert:
    at: simcore.SimTime
    port: PortRef
    mac: str
    confidence: str              # high | low
    reason: str


def detect_spoof(signature: LinkFlapSignature, expected_mac: str,
                 ghost_vlans: set[int] | None = None,
                 port_vlan: int | None = None) -> SpoofAlert | None:
    """Alert iff the expected MAC reappeared after the flap but the host
    never spoke the management handshake; demoted to low confidence when
    the port sits in an active ghost VLAN (the usual false positive)."""
    if expected_mac not in signature.post_up_macs:
        return None
    if signature.handshake_seen:
        return None
    ghosting = bool(ghost_vlans) and port_vlan in (ghost_vlans or set())
    return SpoofAlert(
        at=signature.up_at + HANDSHAKE_WINDOW,
        port=signature.port,
        mac=expected_mac,
        confidence="low" if ghosting else "high",
        reason="link flap, expected MAC returned, no management handshake"
               + (" (ghost session active)" if ghosting else ""),
    )


@dataclass(frozen=True)
class FlowRecord:
    src_host: str
    dst_addr: str
    bytes_in: int
    bytes_out: int
    window: tuple[simcore.SimTime, simcore.SimTime]


@dataclass
class TalkerRow:
    host: str
    bytes_in: int
    bytes_out: int
    exempt_bytes_in: int
    exempt_bytes_out: int

    @property
    def rank_key(self) -> int:
        return max(self.bytes_in, self.bytes_out)


def top_talkers(flows, window: tuple[int, int] | None, n: int,
                patch_sites: PatchSiteList) -> list[TalkerRow]:
    """Per-host totals toward external destinations; traffic to patch-site
    netblocks is tracked but excluded from the ranking totals."""
    rows: dict[str, TalkerRow] = {}
    for flow in flows:
        if window is not None:
            start, end = window
            if flow.window[1] <= start or flow.window[0] >= end:
                continue
        row = rows.setdefault(
            flow.src_host, TalkerRow(flow.src_host, 0, 0, 0, 0))
        if patch_sites.lookup(flow.dst_addr) is not None:
            row.exempt_bytes_in += flow.bytes_in
            row.exempt_bytes_out += flow.bytes_out
        else:
            row.bytes_in += flow.bytes_in
            row.bytes_out += flow.bytes_out
    ranked = sorted(rows.values(), key=lambda r: (-r.rank_key, r.host))
    ranked = [r for r in ranked if r.rank_key > 0]
    return ranked[:n]


def format_talker_report(rows: list[TalkerRow]) -> str:
    """Columnar text table, largest first."""
    lines = [f"{'HOST':<24} {'BYTES_IN':>14} {'BYTES_OUT':>14} "
             f"{'EXEMPT_IN':>14} {'EXEMPT_OUT':>14}"]
    for row in rows:
        lines.append(
            f"{row.host:<24} {row.bytes_in:>14} {row.bytes_out:>14} "
            f"{row.exempt_bytes_in:>14} {row.exempt_bytes_out:>14}")
    return "\n".join(lines) + "\n"


def recommend_choke(report: list[TalkerRow], threshold_bytes: int,
                    whitelist: PatchSiteList | None = None,
                    resolver_names: dict[str, str] | None = None,
                    avg_per_sec: int = 20, burst: int = 20) -> list[ChokeEntry]:
    """Hosts above threshold become choke entries for the next compile.

    `whitelist` exempts research/educational partner hosts by address
    (same grammar as the patch-site list)."""
    out = []
    for row in report:
        if row.rank_key < threshold_bytes:
            continue
        addr = (resolver_names or {}).get(row.host, row.host)
        if whitelist is not None:
            try:
                if whitelist.lookup(addr) is not None:
                    continue
            except ValueError:
                pass  # hostnames with no address stay chokeable
        out.append(ChokeEntry(host=row.host, avg_per_sec=avg_per_sec,
                              burst=burst))
    return out


def format_choke_list(entries: list[ChokeEntry]) -> str:
    """Choke-list grammar understood by the firewall compiler."""
    return "".join(
        f"{e.host} {e.avg_per_sec} {e.burst}\n" for e in entries)


@dataclass(frozen=True)
class SwpvioEvent:
    at: simcore.SimTime
    port: PortRef
    offending_mac: str
    mode: str
    alerted: bool
    jack: str | None = None
    room: str | None = None


class SwpvioFeed:
    """Subscribes to fabric violations; alerted ones surface exactly once,
    enriched with jack/room location from the inventory joins."""

    def __init__(self, fabric, topo, inventory=None):
        self.topo = topo
        self.inventory = inventory
        self.events: list[SwpvioEvent] = []
        self.all_violations: list = []
        fabric.violation_listeners.append(self._on_violation)

    def _on_violation(self, violation) -> None:
        self.all_violations.append(violation)
        jack = self.topo.jack_for_port(violation.port)
        room = self.topo.jacks[jack].room if jack else None
        event = SwpvioEvent(
            at=violation.at, port=violation.port,
            offending_mac=violation.offending_mac, mode=violation.mode,
            alerted=violation.alerted, jack=jack, room=room)
        if violation.alerted:
            self.events.append(event)

    def export(self) -> str:
        """Line-delimited alert feed."""
        lines = []
        for e in self.events:
            lines.append(
                f"{e.at} swpvio port={e.port} mac={e.offending_mac} "
                f"mode={e.mode} jack={e.jack or 'unknown'} "
                f"room={e.room or 'unknown'}")
        return "\n".join(lines) + ("\n" if lines else "")

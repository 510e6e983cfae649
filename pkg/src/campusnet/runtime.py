"""Wires one simulated campus together: topology, spanning tree, the
forwarding fabric, both firewalled router pairs, ghosting, monitoring and
the inventory database, and exposes the operation surface the control
plane (shell, HTTP API, scenario runner) calls into.

Everything mutating goes through an op method here so auditing and event
logging see one narrow interface.
"""

from __future__ import annotations

import importlib.resources
import pathlib

from . import simcore
from .errors import UnknownTarget
from .fwengine import (
    FirewallEngine,
    NatTable,
    PolicyProfile,
    QuarantineEntry,
    StaticResolver,
    blocked_hosts_report,
    compile_ruleset,
    parse_chokes,
    parse_quarantine,
    PatchSiteList,
)
from .ghosting import GhostRegistry
from .inventory import InventoryDB
from .l2switch import SwitchFabric
from .monitoring import SwpvioFeed
from .routerha import RouterPair
from .simcore import Simulator
from .stp import StpProcess, StpTimers
from .topology import (
    LinkDown,
    LinkUp,
    NetTopology,
    PortRef,
    RouterFail,
    StackElementFail,
    UpsFail,
    load_topology,
)

POLICY_FILES = ("profile", "quarantine", "patch-sites", "chokes",
                "outside-chokes", "resolver", "whitelist")


def load_policy_dir(policy_dir: str | pathlib.Path | None) -> dict[str, str]:
    """Read the seven policy source files; missing files read as empty.

    With no directory given, the package-shipped defaults apply.
    """
    texts: dict[str, str] = {}
    if policy_dir is None:
        root = importlib.resources.files("campusnet") / "profiles"
        for name in POLICY_FILES:
            res = root / name
            texts[name] = res.read_text() if res.is_file() else ""
    else:
        root = pathlib.Path(policy_dir)
        for name in POLICY_FILES:
            path = root / name
            texts[name] = path.read_text() if path.exists() else ""
    return texts


def _parse_outside_chokes(text: str) -> list[str]:
    """Lines of `<cidr> [label...]`."""
    out = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        out.append(line.split()[0])
    return out


class CampusRuntime:
    """One campus: the simulator plus every subsystem, fully wired."""

    def __init__(self, topology_text: str,
                 policy_dir: str | pathlib.Path | None = None,
                 fast_timers: bool = True, log_frames: bool = False):
        self.sim = Simulator()
        self.topo: NetTopology = load_topology(topology_text)
        timers = StpTimers.fast() if fast_timers else StpTimers()
        self.stp = StpProcess(self.sim, self.topo, timers)
        self.fabric = SwitchFabric(self.sim, self.topo, self.stp,
                                   log_frames=log_frames)
        self.ghosts = GhostRegistry(self.sim, self.topo, self.fabric)
        self.inventory = InventoryDB()
        self.inventory.load_topology(self.topo)
        self.swpvio = SwpvioFeed(self.fabric, self.topo, self.inventory)

        self.policy_texts = load_policy_dir(policy_dir)
        self.resolver = StaticResolver.from_text(self.policy_texts["resolver"])
        for host in self.topo.hosts.values():
            self.resolver.add(host.id, host.ip)
            self.resolver.add(f"{host.id}.{self.inventory.domain}", host.ip)
        self.profile = PolicyProfile.from_text(self.policy_texts["profile"])
        self.quarantine = parse_quarantine(self.policy_texts["quarantine"])
        self.patch_sites = PatchSiteList.from_text(
            self.policy_texts["patch-sites"])
        self.chokes = parse_chokes(self.policy_texts["chokes"])
        self.outside_chokes = _parse_outside_chokes(
            self.policy_texts["outside-chokes"])
        self.whitelist = PatchSiteList.from_text(self.policy_texts["whitelist"])

        self.fw_internal = FirewallEngine("internal")
        self.fw_external = FirewallEngine("external")
        self.nat = NatTable()
        self.recompile_firewalls()
        self.inventory.set_quarantine(self.quarantine)

        self.pairs: dict[str, RouterPair] = {}
        self._build_router_pairs()

        self.sim.set_snapshot_provider(self._snapshot)
        self.stp.converge()

    # -- construction helpers ----------------------------------------------------

    def _build_router_pairs(self) -> None:
        by_pair: dict[str, dict[str, str]] = {}
        for router in self.topo.routers.values():
            by_pair.setdefault(router.pair, {})[router.role] = router.id
        subnets = {
            vid: info.get("subnet")
            for vid, info in self.topo.vlans.items()
        }
        for pair_name, roles in by_pair.items():
            if "primary" not in roles or "secondary" not in roles:
                raise UnknownTarget(
                    f"router pair {pair_name} needs primary and secondary")
            external = pair_name == "external"
            pair = RouterPair(
                self.sim, pair_name, roles["primary"], roles["secondary"],
                subnets,
                firewall=self.fw_external if external else self.fw_internal,
                nat=self.nat if external else None,
                default_route=external,
            )
            self.pairs[pair_name] = pair
            pair.start()

    def recompile_firewalls(self) -> dict[str, int]:
        """Compile both profiles from current policy state and swap."""
        int_profile = PolicyProfile(
            quarantine_mark=self.profile.quarantine_mark,
            local_subnets=list(self.profile.local_subnets),
            dns_servers=list(self.profile.dns_servers),
            antivirus=list(self.profile.antivirus),
            allow=list(self.profile.allow),
        )
        internal = compile_ruleset(
            self.quarantine, self.patch_sites, self.chokes,
            [], int_profile, self.resolver)
        ext_profile = PolicyProfile(
            quarantine_mark=self.profile.quarantine_mark,
            local_subnets=list(self.profile.local_subnets),
            dns_servers=list(self.profile.dns_servers),
            antivirus=list(self.profile.antivirus),
            snat=list(self.profile.snat),
            allow=list(self.profile.allow_ext),
        )
        external = compile_ruleset(
            self.quarantine, self.patch_sites, [],
            self.outside_chokes, ext_profile, self.resolver)
        versions = {
            "internal": self.fw_internal.swap(internal),
            "external": self.fw_external.swap(external),
        }
        self.sim.emit("CommandApplied", {
            "op": "fw-swap",
            "internal": versions["internal"],
            "external": versions["external"],
            "rules_internal": internal.rule_count(),
            "rules_external": external.rule_count(),
        })
        return versions

    # -- clock --------------------------------------------------------------------

    def advance(self, delay: simcore.SimTime) -> None:
        self.sim.run_until(self.sim.clock + delay)

    def settle(self, deadline: simcore.SimTime | None = None) -> dict:
        """Reconcile router liveness, reconverge STP, return the STP view."""
        for router in self.topo.routers.values():
            pair = self.pairs.get(router.pair)
            if pair is not None:
                pair.mark_router_state(router.id, router.alive)
        return self.stp.converge(deadline)

    # -- command-bus operations ------------------------------------------------------

    def op_set_port_vlan(self, ref: str | PortRef, vlan: int) -> dict:
        ref = ref if isinstance(ref, PortRef) else PortRef.parse(ref)
        self.fabric.set_port_vlan(ref, vlan)
        self.sim.emit("CommandApplied",
                      {"op": "set-port-vlan", "port": str(ref), "vlan": vlan})
        return {"port": str(ref), "vlan": vlan}

    def op_clear_sticky(self, ref: str | PortRef) -> dict:
        ref = ref if isinstance(ref, PortRef) else PortRef.parse(ref)
        self.fabric.clear_sticky(ref)
        self.sim.emit("CommandApplied",
                      {"op": "clear-sticky", "port": str(ref)})
        return {"port": str(ref), "cleared": True}

    def op_quarantine(self, hostname: str, analyst: str | None = None,
                      date: str | None = None, ip: str | None = None,
                      score: int | None = None, os_tag: str | None = None,
                      vuln_tag: str | None = None) -> dict:
        if any(e.hostname == hostname for e in self.quarantine):
            return {"host": hostname, "quarantined": True, "changed": False}
        self.quarantine.append(QuarantineEntry(
            hostname=hostname, analyst=analyst, date=date, ip=ip,
            score=score, os_tag=os_tag, vuln_tag=vuln_tag))
        versions = self.recompile_firewalls()
        self.inventory.set_quarantine(self.quarantine)
        self.sim.emit("CommandApplied",
                      {"op": "quarantine-add", "host": hostname})
        return {"host": hostname, "quarantined": True, "changed": True,
                "fw_versions": versions}

    def op_unquarantine(self, hostname: str) -> dict:
        before = len(self.quarantine)
        self.quarantine = [e for e in self.quarantine
                           if e.hostname != hostname]
        if len(self.quarantine) == before:
            raise UnknownTarget(f"{hostname} is not quarantined")
        versions = self.recompile_firewalls()
        self.inventory.set_quarantine(self.quarantine)
        self.sim.emit("CommandApplied",
                      {"op": "quarantine-remove", "host": hostname})
        return {"host": hostname, "quarantined": False,
                "fw_versions": versions}

    def op_ghost_start(self, manifest: str) -> dict:
        session = self.ghosts.start_from_manifest(manifest)
        return {"session": session.id, "vlan": session.ghost_vlan,
                "members": len(session.members) - 1}

    def op_ghost_distribute(self, session_id: int, image_bytes: int) -> dict:
        session = self.ghosts.sessions[session_id]
        return self.ghosts.run_distribution(session, image_bytes)

    def op_ghost_stop(self, session_id: int) -> dict:
        session = self.ghosts.sessions.get(session_id)
        if session is None:
            raise UnknownTarget(f"no ghost session {session_id}")
        restored = self.ghosts.teardown(session)
        return {"session": session_id, "restored": len(restored)}

    def op_fault(self, spec: str) -> dict:
        """`link-down <id>` | `link-up <id>` | `element-fail <sw> <n>` |
        `ups-fail <name>` | `router-fail <id>` | `spare-activate <sw> <n>`"""
        fault = parse_fault(spec)
        if fault == "spare":
            _, sw, el = spec.split()
            self.topo.activate_spare(self.sim, sw, int(el))
        else:
            self.topo.inject_fault(self.sim, fault)
        self.settle()
        return {"fault": spec, "applied": True}

    def op_failover(self, pair: str) -> dict:
        active = self.pairs[pair].failover()
        return {"pair": pair, "active": active}

    def op_failback(self, pair: str) -> dict:
        active = self.pairs[pair].failback()
        return {"pair": pair, "active": active}

    # -- read surface ------------------------------------------------------------------

    def topology_doc(self) -> dict:
        doc = self.topo.export_nodes_edges()
        doc["root_bridge"] = self.stp.root_bridge()
        doc["clock"] = self.sim.clock
        return doc

    def ports_doc(self, switch: str | None = None) -> list[dict]:
        return self.fabric.port_table(switch)

    def events_since(self, seq: int) -> list[dict]:
        return [
            {"at": e.at, "seq": e.seq, "kind": e.kind, "payload": e.payload}
            for e in self.sim.log.since(seq)
        ]

    def blocked_report(self) -> str:
        sites = [f"{c} (rate-limited)" for c in self.outside_chokes]
        return blocked_hosts_report(self.quarantine, sites)

    def ghost_vlan_owners(self) -> dict[int, str]:
        return {
            s.ghost_vlan: s.analyst for s in self.ghosts.active_sessions()
        }

    def sync_inventory(self) -> dict:
        snap = self.topo.snapshot_state()
        snap["ghost_vlans"] = {
            str(v): a for v, a in self.ghost_vlan_owners().items()
        }
        return self.inventory.sync_from_network(snap)

    def _snapshot(self) -> dict:
        state = self.topo.snapshot_state()
        state["ghost_vlans"] = {
            str(v): a for v, a in self.ghost_vlan_owners().items()
        }
        state["fw_versions"] = {
            "internal": self.fw_internal.active.version
            if self.fw_internal.active else 0,
            "external": self.fw_external.active.version
            if self.fw_external.active else 0,
        }
        state["router_active"] = {
            name: pair.active.id for name, pair in self.pairs.items()
        }
        return state


def parse_fault(spec: str):
    parts = spec.split()
    kind = parts[0]
    if kind == "link-down":
        return LinkDown(parts[1])
    if kind == "link-up":
        return LinkUp(parts[1])
    if kind == "element-fail":
        return StackElementFail(parts[1], int(parts[2]))
    if kind == "ups-fail":
        return UpsFail(parts[1])
    if kind == "router-fail":
        return RouterFail(parts[1])
    if kind == "spare-activate":
        return "spare"
    raise UnknownTarget(f"unknown fault kind {kind!r}")

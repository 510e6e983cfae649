"""End-to-end acceptance suite.

Each test prints a single PASS/FAIL line (run with -s to watch) and
fails loudly if the property does not hold.  Oracles are independent of
the implementation under test: brute-force graph checks, a
Fraction-based token-bucket reference, and from-scratch flood walks.
"""

import random
import re
import time

from campusnet import demo, simcore
from campusnet.control import ROLES, CommandBus
from campusnet.control.bus import Command
from campusnet.fwengine import (
    ChokeEntry,
    FirewallEngine,
    Packet,
    PatchSiteList,
    PolicyProfile,
    QuarantineEntry,
    StaticResolver,
    TokenBucket,
    compile_ruleset,
    parse_chokes,
    parse_quarantine,
)
from campusnet.l2switch import Frame
from campusnet.monitoring import LinkFlapSignature, detect_spoof
from campusnet.routerha import (
    DEFAULT_SYNC_INTERVAL,
    HEARTBEAT_INTERVAL,
    HEARTBEAT_MISSES,
)
from campusnet.runtime import CampusRuntime, load_policy_dir
from campusnet.simcore import Simulator
from campusnet.stp import StpProcess, StpTimers, brute_force_spanning_tree_ok
from campusnet.topology import PortRef, load_topology

from .oracles import ReferenceTokenBucket, expected_flood_set
from .test_routerha import establish, make_pair
from .test_stp import random_topology_text

SEC = simcore.NS_PER_SEC
NETADMIN = ROLES["netadmin"]

SCENARIOS = ["triangle.scn", "ups-failure.scn", "ghost-10x.scn",
             "failover.scn", "quarantine.scn"]


def _verdict(n: int, name: str, ok: bool, extra: str = "") -> None:
    tail = f"  ({extra})" if extra else ""
    print(f"criterion {n:2d} {name:<38} {'PASS' if ok else 'FAIL'}{tail}")
    assert ok, f"criterion {n} ({name}) failed"


def test_01_stp_spanning_tree_property():
    rng = random.Random(20101103)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(200):
        topo = load_topology(random_topology_text(rng))
        sim = Simulator()
        stp = StpProcess(sim, topo, StpTimers.fast())
        stp.converge()
        if not brute_force_spanning_tree_ok(topo, stp):
            failures += 1
    wall = time.perf_counter() - t0
    _verdict(1, "STP spanning-tree property", failures == 0 and wall < 10,
             f"200 graphs, {wall:.2f}s wall")


def test_02_triangle_blocks_and_reconverges():
    base = CampusRuntime(demo.triangle())
    direct = "A11:1/26--A12:1/26"
    blocked_ok = not base.stp.link_is_forwarding(base.topo.links[direct]) \
        and base.stp.link_is_forwarding(
            base.topo.links["A11:1/25--CORE:1/15"]) \
        and base.stp.link_is_forwarding(
            base.topo.links["A12:1/25--CORE:3/15"])
    cases_ok = True
    worst = 0
    for fault in ("link-down A11:1/25--CORE:1/15",
                  "link-down A12:1/25--CORE:3/15",
                  "element-fail CORE 1",
                  "element-fail CORE 3"):
        rt = CampusRuntime(demo.triangle())
        bound = rt.stp.timers.reconvergence_bound
        t0 = rt.sim.clock
        rt.op_fault(fault)
        elapsed = rt.sim.clock - t0
        worst = max(worst, elapsed)
        cases_ok &= elapsed <= 2 * bound
        cases_ok &= rt.stp.link_is_forwarding(rt.topo.links[direct])
        cases_ok &= rt.topo.all_switches_mutually_reachable(
            forwarding=rt.stp.link_is_forwarding)
    _verdict(2, "triangle block / fail-over exact", blocked_ok and cases_ok,
             f"worst reconvergence {simcore.fmt_time(worst)}")


def test_03_ring_ups_resilience():
    ok = True
    for ups in ("upsA", "upsB"):
        rt = CampusRuntime(demo.ring_campus())
        rt.op_fault(f"ups-fail {ups}")
        survivors = {
            sw.id for sw in rt.topo.switches.values()
            if any(not el.failed for el in sw.elements.values())
        }
        ok &= rt.topo.all_switches_mutually_reachable(
            switches=survivors, forwarding=rt.stp.link_is_forwarding)
    _verdict(3, "ring UPS-feed loss, survivors reachable", ok)


def test_04_vlan_isolation_fuzz():
    rt = CampusRuntime(demo.campus(n_hosts=400, n_vlans=200))
    rng = random.Random(4)
    hosts = sorted(h for h, info in rt.topo.hosts.items() if info.jack)
    mismatches = cross_vlan = 0
    for _ in range(1000):
        host = rt.topo.hosts[rng.choice(hosts)]
        ingress = rt.topo.patches[host.jack]
        vlan = rt.topo.port(ingress).vlan
        out = rt.fabric.ingress(ingress, Frame(src=host.mac))
        if set(out) != expected_flood_set(rt.topo, rt.fabric, ingress, vlan):
            mismatches += 1
        cross_vlan += sum(1 for ref in out
                          if not rt.topo.port(ref).admits(vlan))
    _verdict(4, "VLAN isolation, 1000 broadcasts / 200 VLANs",
             mismatches == 0 and cross_vlan == 0,
             f"{mismatches} oracle mismatches, {cross_vlan} cross-VLAN")


def test_05_ghosting_at_scale():
    t0 = time.perf_counter()
    rt = CampusRuntime(demo.campus(n_hosts=1100, n_vlans=200,
                                   hosts_per_switch=48))
    snapshot = {str(p.ref): p.vlan
                for sw in rt.topo.switches.values()
                for p in sw.ports.values() if p.mode == "access"}
    image = 10 * 2 ** 30                 # 10 GB modeled
    chunk = 64 * 2 ** 20                 # scaled chunk count, bytes exact

    def ports_for(host_ids):
        return [rt.topo.patches[rt.topo.hosts[h].jack] for h in host_ids]

    all_pcs = [f"pc{i:04d}" for i in range(1, 1101)]
    sessions = []
    sessions.append(rt.ghosts.start_session(
        "bulk", 901, "ghostsrv1", ports_for(all_pcs[:300])))
    cursor = 300
    for s in range(2, 11):
        members = ports_for(all_pcs[cursor:cursor + 20])
        cursor += 20
        sessions.append(rt.ghosts.start_session(
            f"analyst{s}", 900 + s, f"ghostsrv{s}", members))
    ok = True
    for session in sessions:
        report = rt.ghosts.run_distribution(session, image,
                                            chunk_bytes=chunk)
        ok &= all(b == image for b in report["members"].values())
    ok &= rt.ghosts.stray_ghost_bytes() == {}
    for session in sessions:
        rt.ghosts.teardown(session)
    after = {str(p.ref): p.vlan
             for sw in rt.topo.switches.values()
             for p in sw.ports.values() if p.mode == "access"}
    ok &= after == snapshot
    wall = time.perf_counter() - t0
    _verdict(5, "10 ghost sessions / 1100 hosts / 10 GB",
             ok and wall < 60, f"{wall:.1f}s wall")


def test_06_firewall_golden_traces():
    texts = load_policy_dir(None)
    resolver = StaticResolver.from_text(texts["resolver"])
    resolver.add("web.example.org", "93.184.216.34")
    rs = compile_ruleset(
        parse_quarantine(texts["quarantine"]),
        PatchSiteList.from_text(texts["patch-sites"]),
        parse_chokes(texts["chokes"]),
        [l.split()[0] for l in texts["outside-chokes"].splitlines()
         if l.strip() and not l.startswith("#")],
        PolicyProfile.from_text(texts["profile"]),
        resolver,
    )
    fw = FirewallEngine("internal")
    fw.swap(rs)
    sick = "10.2.0.134"

    def verdict(dst, proto="tcp", dport=80):
        v, _ = fw.evaluate(Packet(src=sick, dst=dst, proto=proto,
                                  dport=dport, conn_state="NEW"))
        return v

    web = verdict("93.184.216.34")
    ok = web.action == "REJECT" and web.reject_with == "tcp-reset"
    ok &= verdict("192.0.2.10", dport=1234).action == "ACCEPT"
    ok &= verdict("10.2.0.7", dport=445).action == "ACCEPT"
    ok &= verdict("17.254.0.91").action == "ACCEPT"      # Apple netblock

    # choke limits vs the reference bucket, zero-tolerance
    drift = 0
    for avg, burst in ((20, 20), (100, 100)):
        bucket = TokenBucket(avg, burst)
        ref = ReferenceTokenBucket(avg, burst)
        for second in range(5):
            for k in range(2 * avg):
                at = second * SEC + k * 1000
                if bucket.check(at) != ref.check(at):
                    drift += 1
    _verdict(6, "firewall golden traces + choke oracle",
             ok and drift == 0, f"bucket drift {drift} packets")


def test_07_firewall_scale():
    texts = load_policy_dir(None)
    resolver = StaticResolver.from_text(texts["resolver"])
    profile = PolicyProfile.from_text(texts["profile"])
    patch_sites = PatchSiteList.from_text(texts["patch-sites"])

    quarantine, chokes = [], []
    for i in range(400):
        name = f"sick{i:03d}.domain"
        resolver.add(name, f"10.{50 + i // 200}.{(i // 250) % 250}.{i % 250 + 1}")
        quarantine.append(QuarantineEntry(hostname=name))
    for i in range(150):
        name = f"hog{i:03d}.domain"
        resolver.add(name, f"10.60.{i // 250}.{i % 250 + 1}")
        chokes.append(ChokeEntry(host=name, avg_per_sec=20, burst=20))

    t0 = time.perf_counter()
    internal = compile_ruleset(quarantine, patch_sites, chokes, [], profile,
                               resolver)
    external = compile_ruleset(quarantine[:150], patch_sites, chokes[:100],
                               ["198.51.100.0/19", "203.0.113.0/19"],
                               profile, resolver)
    fw_int = FirewallEngine("internal")
    fw_int.swap(internal)
    fw_ext = FirewallEngine("external")
    fw_ext.swap(external)
    compile_wall = time.perf_counter() - t0

    n_int, n_ext = internal.rule_count(), external.rule_count()
    sizes_ok = n_int >= 730 and n_ext >= 450 and compile_wall < 1.0

    packets = [Packet(src=f"10.{i % 40}.0.50", dst="198.18.0.1",
                      proto="tcp", dport=443, conn_state="NEW")
               for i in range(64)]
    n_eval = 30_000
    t0 = time.perf_counter()
    for i in range(n_eval):
        fw_int.evaluate(packets[i % 64])
    rate = n_eval / (time.perf_counter() - t0)
    _verdict(7, "firewall scale compile/swap + throughput", sizes_ok,
             f"{n_int}/{n_ext} rules, compile {compile_wall * 1000:.0f}ms, "
             f"{rate:,.0f} pkt/s (soft target 1e5)")


def test_08_conntrack_failover():
    # old session: replicated before the primary dies, zero resets
    sim, pair = make_pair()
    establish(pair, sim)
    sim.run_until(DEFAULT_SYNC_INTERVAL + 1)
    pair.primary.alive = False
    sim.run_until(sim.clock + (HEARTBEAT_MISSES + 1) * HEARTBEAT_INTERVAL)
    old = pair.active.conntrack.lookup(
        ("10.0.10.5", 4001, "10.0.20.9", 80, "tcp"), sim.clock)
    _, verdict = pair.route(
        Packet(src="10.0.10.5", dst="10.0.20.9", proto="tcp", dport=80),
        10, sport=4001)
    old_ok = pair.active is pair.secondary and old is not None \
        and old.state == "ESTABLISHED" and verdict.action == "ACCEPT"

    # young session: never synced, documented as lost (re-seen as NEW)
    sim2, pair2 = make_pair()
    sim2.run_until(DEFAULT_SYNC_INTERVAL + 1)
    establish(pair2, sim2)
    pair2.primary.alive = False
    sim2.run_until(sim2.clock + (HEARTBEAT_MISSES + 1) * HEARTBEAT_INTERVAL)
    young = pair2.active.conntrack.lookup(
        ("10.0.10.5", 4001, "10.0.20.9", 80, "tcp"), sim2.clock)
    pair2.route(Packet(src="10.0.10.5", dst="10.0.20.9", proto="tcp",
                       dport=80), 10, sport=4001)
    reseen = pair2.active.conntrack.lookup(
        ("10.0.10.5", 4001, "10.0.20.9", 80, "tcp"), sim2.clock)
    young_ok = young is None and reseen is not None and reseen.state == "NEW"
    _verdict(8, "conntrack failover old/young sessions", old_ok and young_ok)


def test_09_port_security_modes():
    port = PortRef("A11", 1, 1)

    def violate(rt, n):
        for i in range(n):
            rt.fabric.ingress(port, Frame(src=f"02:66:00:00:00:{i:02x}"))

    def alerts(rt):
        return sum(1 for e in rt.sim.log.entries
                   if e.kind == "AlertRaised"
                   and e.payload.get("alert") == "swpvio")

    # shutdown: err-disable until an operator clear
    rt = CampusRuntime(demo.triangle())
    rt.topo.port(port).security.mode = "shutdown"
    rt.fabric.ingress(port, Frame(src="02:11:00:00:00:01"))
    violate(rt, 1)
    shutdown_ok = rt.topo.port(port).security.err_disabled \
        and not rt.fabric.port_is_up(port)
    rt.fabric.clear_sticky(port)
    shutdown_ok &= rt.fabric.port_is_up(port)

    # restrict: drop + alert, port stays up
    rt = CampusRuntime(demo.triangle())
    rt.fabric.ingress(port, Frame(src="02:11:00:00:00:01"))
    violate(rt, 10)
    restrict_ok = rt.fabric.port_is_up(port) and alerts(rt) == 1

    # protect: drop + silent — 0 alerts under 100 offending frames
    rt = CampusRuntime(demo.triangle())
    rt.topo.port(port).security.mode = "protect"
    rt.fabric.ingress(port, Frame(src="02:11:00:00:00:01"))
    violate(rt, 100)
    protect_ok = alerts(rt) == 0 \
        and rt.topo.port(port).security.violation_count == 100 \
        and rt.fabric.port_is_up(port)
    _verdict(9, "port security shutdown/restrict/protect",
             shutdown_ok and restrict_ok and protect_ok)


def test_10_spoof_detector():
    port = PortRef("A11", 1, 1)
    mac = "02:11:00:00:00:01"
    # unplug at 10s, replug with a cloned MAC that never handshakes,
    # alongside two innocuous flaps that must stay silent
    signatures = [
        LinkFlapSignature(port, 10 * SEC, 40 * SEC, (mac,), False),
        LinkFlapSignature(port, 100 * SEC, 130 * SEC, (mac,), True),
        LinkFlapSignature(port, 200 * SEC, 230 * SEC,
                          ("02:99:00:00:00:99",), False),
    ]
    alerts = [a for a in (detect_spoof(s, mac) for s in signatures) if a]
    one_high = len(alerts) == 1 and alerts[0].confidence == "high"
    demoted = detect_spoof(signatures[0], mac,
                           ghost_vlans={901}, port_vlan=901)
    _verdict(10, "spoof detector high/low confidence",
             one_high and demoted is not None and demoted.confidence == "low")


def test_11_inventory_consistency():
    rt = CampusRuntime(demo.campus(n_hosts=60, n_vlans=12))
    bus = CommandBus(rt)
    # drive real mutations, then reconcile
    bus.execute(NETADMIN, "acc",
                Command("move_port_vlan", {"port": "S01:1/1", "vlan": 1}))
    rt.op_quarantine("pc0002")
    some_link = next(l for l in rt.topo.links if "S01" in l)
    rt.op_fault(f"link-down {some_link}")
    rt.sync_inventory()
    live = rt.topo.snapshot_state()["ports"]
    rows = {r["ref"]: r for r in rt.inventory.query_view("ports")}
    mirror_ok = set(rows) == set(live) and all(
        (rows[ref]["mode"], rows[ref]["vlan"]) ==
        (live[ref]["mode"], live[ref]["vlan"]) for ref in live)

    # 500 mixed writes never cross the auto/manual partition
    rng = random.Random(11)
    db = rt.inventory
    db.manual_update("vlan", {"id": 100}, {"purpose": "keepme",
                                           "owner": "ops"})
    for i in range(500):
        roll = rng.random()
        if roll < 0.4:
            db.record_sighting(f"02:77:00:00:00:{rng.randrange(99):02x}",
                               "S01:1/2", (i + 1) * SEC)
        elif roll < 0.7:
            db.manual_update("host", {"id": "pc0001"},
                             {"managed": rng.choice(["user", "analyst"])})
        else:
            rt.sync_inventory()
    vlan = db.db.execute(
        "SELECT purpose, owner FROM vlan WHERE id=100").fetchone()
    partition_ok = (vlan["purpose"], vlan["owner"]) == ("keepme", "ops")

    # auto-maintained descriptions carry the documented shape
    mac = rt.topo.hosts["pc0003"].mac
    db.record_sighting(mac, "S01:1/3", 999 * SEC)
    desc = db.db.execute(
        "SELECT description FROM port WHERE ref='S01:1/3'").fetchone()
    auto_ok = re.fullmatch(r"\[Auto\] \S+\.\S+", desc["description"]) \
        is not None
    _verdict(11, "inventory sync + column partition",
             mirror_ok and partition_ok and auto_ok)


def test_12_determinism():
    def run_once(name: str) -> str:
        import pathlib

        path = pathlib.Path(__file__).parent.parent / \
            "src/campusnet/scenarios" / name
        text = path.read_text()
        from campusnet.control.scenario import parse_scenario
        topology_ref, _ = parse_scenario(text)
        rt = CampusRuntime(demo.builtin_topology(topology_ref))
        bus = CommandBus(rt)
        report = bus.run_script(NETADMIN, "accept", text)
        assert report["passed"]
        return report["log"]

    diffs = [name for name in SCENARIOS if run_once(name) != run_once(name)]
    _verdict(12, "shipped scenarios replay byte-identical", not diffs,
             f"{len(SCENARIOS)} scenarios x2")

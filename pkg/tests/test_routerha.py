import pytest

from campusnet import simcore
from campusnet.errors import BothDown, NoRoute, PeerDown
from campusnet.fwengine import FirewallEngine, Packet, Rule, Ruleset
from campusnet.routerha import (
    DEFAULT_SYNC_INTERVAL,
    HEARTBEAT_INTERVAL,
    HEARTBEAT_MISSES,
    ConnTrackTable,
    RouterPair,
)
from campusnet.simcore import Simulator

from .oracles import conntrack_expired

SEC = simcore.NS_PER_SEC

SUBNETS = {10: "10.0.10.0/24", 20: "10.0.20.0/24"}


def permissive_firewall() -> FirewallEngine:
    rs = Ruleset()
    rs.chains["FORWARD"].append(Rule(target="ACCEPT",
                                     conn_state="ESTABLISHED"))
    rs.chains["FORWARD"].append(Rule(target="ACCEPT", conn_state="NEW"))
    fw = FirewallEngine()
    fw.swap(rs)
    return fw


def make_pair(sim=None, start=True) -> tuple[Simulator, RouterPair]:
    sim = sim or Simulator()
    pair = RouterPair(sim, "internal", "r1", "r2", SUBNETS,
                      permissive_firewall())
    if start:
        pair.start()
    return sim, pair


def establish(pair, sim, sport=4001, dport=80):
    """Forward then reverse packet -> ESTABLISHED on the active table."""
    fwd = Packet(src="10.0.10.5", dst="10.0.20.9", proto="tcp", dport=dport)
    rev = Packet(src="10.0.20.9", dst="10.0.10.5", proto="tcp", dport=sport)
    pair.route(fwd, 10, sport=sport)
    pair.route(rev, 20, sport=dport)
    return (fwd, sport)


# -- conntrack table -----------------------------------------------------------


def test_new_promotes_to_established_on_reverse_packet():
    table = ConnTrackTable()
    key = ("10.0.10.5", 4001, "10.0.20.9", 80, "tcp")
    entry = table.note(key, 0)
    assert entry.state == "NEW"
    reverse = ("10.0.20.9", 80, "10.0.10.5", 4001, "tcp")
    entry2 = table.note(reverse, 1 * SEC)
    assert entry2 is entry
    assert entry.state == "ESTABLISHED"


@pytest.mark.parametrize("state,age_s,alive", [
    ("NEW", 59, True), ("NEW", 61, False),
    ("ESTABLISHED", 599, True), ("ESTABLISHED", 601, False),
])
def test_idle_timeouts_match_oracle(state, age_s, alive):
    table = ConnTrackTable()
    key = ("a", 1, "b", 2, "tcp")
    entry = table.note(key, 0)
    entry.state = state
    now = age_s * SEC
    assert (table.lookup(key, now) is not None) == alive
    assert conntrack_expired(state, 0, now) == (not alive)


def test_lookup_matches_reverse_tuple():
    table = ConnTrackTable()
    key = ("a", 1, "b", 2, "tcp")
    table.note(key, 0)
    assert table.lookup(("b", 2, "a", 1, "tcp"), 0) is not None


# -- pair behavior ------------------------------------------------------------------


def test_route_tracks_and_returns_vlan():
    sim, pair = make_pair(start=False)
    vlan_out, verdict = pair.route(
        Packet(src="10.0.10.5", dst="10.0.20.9", proto="tcp", dport=80),
        10, sport=4001)
    assert vlan_out == 20
    assert verdict.action == "ACCEPT"
    assert len(pair.active.conntrack.entries) == 1


def test_no_route_raises_without_default():
    _, pair = make_pair(start=False)
    with pytest.raises(NoRoute):
        pair.route(Packet(src="10.0.10.5", dst="198.18.0.1"), 10)


def test_sync_replicates_established_only():
    sim, pair = make_pair(start=False)
    establish(pair, sim)                               # ESTABLISHED
    pair.route(Packet(src="10.0.10.6", dst="10.0.20.9", proto="tcp",
                      dport=443), 10, sport=4002)      # NEW, not synced
    batch = pair.sync()
    assert len(batch.entries) == 1
    assert len(pair.secondary.conntrack.entries) == 1


def test_sync_raises_when_peer_down():
    sim, pair = make_pair(start=False)
    pair.secondary.alive = False
    with pytest.raises(PeerDown):
        pair.sync()


def test_old_session_survives_failover_zero_resets():
    sim, pair = make_pair()
    establish(pair, sim)
    # one full sync interval passes -> session replicated
    sim.run_until(DEFAULT_SYNC_INTERVAL + 1)
    pair.primary.alive = False
    sim.run_until(sim.clock + (HEARTBEAT_MISSES + 1) * HEARTBEAT_INTERVAL)
    assert pair.active is pair.secondary
    vlan_out, verdict = pair.route(
        Packet(src="10.0.10.5", dst="10.0.20.9", proto="tcp", dport=80),
        10, sport=4001)
    assert verdict.action == "ACCEPT"
    entry = pair.active.conntrack.lookup(
        ("10.0.10.5", 4001, "10.0.20.9", 80, "tcp"), sim.clock)
    assert entry.state == "ESTABLISHED"


def test_young_session_is_new_after_failover():
    sim, pair = make_pair()
    sim.run_until(DEFAULT_SYNC_INTERVAL + 1)   # a sync has already run
    establish(pair, sim)                       # younger than next sync
    pair.primary.alive = False
    sim.run_until(sim.clock + (HEARTBEAT_MISSES + 1) * HEARTBEAT_INTERVAL)
    assert pair.active is pair.secondary
    entry = pair.active.conntrack.lookup(
        ("10.0.10.5", 4001, "10.0.20.9", 80, "tcp"), sim.clock)
    assert entry is None                       # documented loss window


def test_detection_gap_blackholes():
    sim, pair = make_pair()
    pair.primary.alive = False
    # before the heartbeat misses accumulate the dead active drops traffic
    vlan_out, verdict = pair.route(
        Packet(src="10.0.10.5", dst="10.0.20.9"), 10)
    assert verdict.action == "DROP"
    assert any(e.payload.get("alert") == "blackhole"
               for e in sim.log.entries)


def test_failover_requires_live_secondary():
    sim, pair = make_pair(start=False)
    pair.primary.alive = False
    pair.secondary.alive = False
    with pytest.raises(BothDown):
        pair.failover()


def test_manual_failback():
    sim, pair = make_pair(start=False)
    pair.primary.alive = False
    pair.failover()
    with pytest.raises(PeerDown):
        pair.failback()
    pair.primary.alive = True
    assert pair.failback() == "r1"
    assert pair.active is pair.primary


def test_heartbeat_detects_within_three_misses():
    sim, pair = make_pair()
    sim.run_until(5 * SEC)
    pair.primary.alive = False
    t0 = sim.clock
    sim.run_until(t0 + (HEARTBEAT_MISSES + 2) * HEARTBEAT_INTERVAL)
    failover_events = [e for e in sim.log.entries
                       if e.payload.get("alert") == "failover"]
    assert len(failover_events) == 1
    detect_delay = failover_events[0].at - t0
    assert detect_delay <= (HEARTBEAT_MISSES + 1) * HEARTBEAT_INTERVAL

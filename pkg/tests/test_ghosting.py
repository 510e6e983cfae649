import pytest

from campusnet import demo
from campusnet.errors import (
    EmptySession,
    PortAlreadyGhosting,
    SessionNotActive,
    TwoServersOneVlan,
    UnknownTarget,
    UnknownVlan,
)
from campusnet.runtime import CampusRuntime
from campusnet.topology import PortRef


@pytest.fixture
def rt():
    return CampusRuntime(demo.campus(n_hosts=40, n_vlans=8))


def member_ports(rt, host_ids):
    return [rt.topo.patches[rt.topo.hosts[h].jack] for h in host_ids]


def test_start_session_moves_ports_and_records_originals(rt):
    ports = member_ports(rt, ["pc0001", "pc0002"])
    originals = [rt.topo.port(p).vlan for p in ports]
    session = rt.ghosts.start_session("alice", 901, "ghostsrv1", ports)
    for p in ports:
        assert rt.topo.port(p).vlan == 901
    assert [orig for ref, orig in session.members[:-1]] == originals
    # the server port moved too and is recorded last
    server_ref, server_orig = session.members[-1]
    assert rt.topo.port(server_ref).vlan == 901


def test_session_guards(rt):
    ports = member_ports(rt, ["pc0001"])
    with pytest.raises(UnknownVlan):
        rt.ghosts.start_session("a", 999, "ghostsrv1", ports)
    with pytest.raises(UnknownTarget):
        rt.ghosts.start_session("a", 901, "nosuchhost", ports)
    with pytest.raises(EmptySession):
        rt.ghosts.start_session("a", 901, "ghostsrv1", [])
    rt.ghosts.start_session("a", 901, "ghostsrv1", ports)
    with pytest.raises(TwoServersOneVlan):
        rt.ghosts.start_session("b", 901, "ghostsrv2",
                                member_ports(rt, ["pc0002"]))
    with pytest.raises(PortAlreadyGhosting):
        rt.ghosts.start_session("b", 902, "ghostsrv2", ports)


def test_distribution_bytes_exact_with_remainder(rt):
    ports = member_ports(rt, ["pc0001", "pc0002", "pc0003"])
    session = rt.ghosts.start_session("alice", 901, "ghostsrv1", ports)
    image = 10 * 8192 + 137          # forces a short final chunk
    report = rt.ghosts.run_distribution(session, image)
    assert report["bytes_total"] == image
    assert set(report["members"]) == {str(p) for p in ports}
    assert all(received == image for received in report["members"].values())


def test_isolation_no_stray_bytes(rt):
    ports = member_ports(rt, ["pc0001", "pc0002"])
    s1 = rt.ghosts.start_session("alice", 901, "ghostsrv1", ports)
    s2 = rt.ghosts.start_session("bob", 902, "ghostsrv2",
                                 member_ports(rt, ["pc0003"]))
    rt.ghosts.run_distribution(s1, 5 * 8192)
    rt.ghosts.run_distribution(s2, 3 * 8192)
    assert rt.ghosts.stray_ghost_bytes() == {}
    # sessions do not leak into each other
    assert all(b == 5 * 8192 for b in
               rt.ghosts.delivery_report(s1)["members"].values())
    assert all(b == 3 * 8192 for b in
               rt.ghosts.delivery_report(s2)["members"].values())


def test_teardown_restores_vlans_and_is_idempotent(rt):
    snapshot = {str(p.ref): p.vlan
                for sw in rt.topo.switches.values()
                for p in sw.ports.values() if p.mode == "access"}
    ports = member_ports(rt, ["pc0001", "pc0002"])
    session = rt.ghosts.start_session("alice", 901, "ghostsrv1", ports)
    rt.ghosts.run_distribution(session, 8192)
    restored = rt.ghosts.teardown(session)
    assert len(restored) == 3        # two members + server
    after = {str(p.ref): p.vlan
             for sw in rt.topo.switches.values()
             for p in sw.ports.values() if p.mode == "access"}
    assert after == snapshot
    assert rt.ghosts.teardown(session) == []     # no-op second time
    with pytest.raises(SessionNotActive):
        rt.ghosts.run_distribution(session, 8192)


def test_manifest_resolves_jack_and_host_members(rt):
    host = rt.topo.hosts["pc0004"]
    manifest = "\n".join([
        "analyst carol",
        "vlan 903",
        "server ghostsrv3",
        f"member host:pc0003",
        f"member jack:{host.jack}",
        f"member {rt.topo.patches[rt.topo.hosts['pc0005'].jack]}",
    ])
    session = rt.ghosts.start_from_manifest(manifest)
    assert session.analyst == "carol"
    assert len(session.members) == 4             # three members + server


def test_manifest_missing_fields_rejected(rt):
    with pytest.raises(UnknownTarget):
        rt.ghosts.start_from_manifest("analyst x\nmember host:pc0001\n")


def test_active_ghost_vlans_tracks_lifecycle(rt):
    session = rt.ghosts.start_session(
        "alice", 901, "ghostsrv1", member_ports(rt, ["pc0001"]))
    assert rt.ghosts.active_ghost_vlans() == {901}
    rt.ghosts.teardown(session)
    assert rt.ghosts.active_ghost_vlans() == set()

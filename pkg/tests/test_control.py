import io
import json
import urllib.error
import urllib.request

import pytest

from campusnet import demo
from campusnet.control import ROLES, CommandBus
from campusnet.control.api import serve_background
from campusnet.control.bus import Command, parse_shell_line
from campusnet.control.roles import load_token_table
from campusnet.control.scenario import format_report
from campusnet.control.shell import CampusShell
from campusnet.errors import Forbidden, ScriptError, UnknownTarget
from campusnet.runtime import CampusRuntime

NETADMIN = ROLES["netadmin"]
DESKTOP = ROLES["desktop"]
SERVICEDESK = ROLES["servicedesk"]


@pytest.fixture
def bus(campus_rt):
    return CommandBus(campus_rt)


# -- roles ----------------------------------------------------------------------


def test_role_hierarchy_is_strict_superset_chain():
    assert SERVICEDESK.allowed_ops < DESKTOP.allowed_ops < NETADMIN.allowed_ops
    assert SERVICEDESK.allowed_views < DESKTOP.allowed_views \
        < NETADMIN.allowed_views


def test_servicedesk_cannot_inject_faults(bus):
    with pytest.raises(Forbidden):
        bus.execute(SERVICEDESK, "deskie",
                    Command("inject_fault", {"fault": "link-down L1"}))
    assert bus.runtime.inventory.audit_rows() == []   # rejected before audit


def test_servicedesk_can_clear_sticky(bus):
    ref = next(str(p) for p in bus.runtime.topo.patches.values())
    out = bus.execute(SERVICEDESK, "deskie",
                      Command("clear_sticky", {"port": ref}))
    assert out["result"]["port"] == ref


def test_desktop_can_ghost_but_not_quarantine(bus):
    manifest = "analyst d\nvlan 901\nserver ghostsrv1\nmember host:pc0001\n"
    out = bus.execute(DESKTOP, "dt",
                      Command("start_ghost", {"manifest": manifest}))
    session = out["result"]["session"]
    bus.execute(DESKTOP, "dt", Command("teardown_ghost", {"session": session}))
    with pytest.raises(Forbidden):
        bus.execute(DESKTOP, "dt", Command("quarantine", {"host": "pc0001"}))


def test_view_access_follows_role(bus):
    assert bus.query_as(SERVICEDESK, "d", "ports")
    with pytest.raises(Forbidden):
        bus.query_as(SERVICEDESK, "d", "sightings")
    assert bus.query_as(NETADMIN, "n", "sightings") == []


def test_token_table_loads(tmp_path):
    f = tmp_path / "tokens"
    f.write_text("# comment\nsecret1 netadmin\nsecret2 servicedesk\n")
    table = load_token_table(str(f))
    assert table["secret1"] is NETADMIN
    assert table["secret2"] is SERVICEDESK
    assert load_token_table(str(tmp_path / "missing")) == {}


# -- bus ------------------------------------------------------------------------


def test_unknown_op_rejected(bus):
    with pytest.raises(UnknownTarget):
        bus.execute(NETADMIN, "n", Command("reboot_everything", {}))


def test_mutations_audited_including_errors(bus):
    bus.execute(NETADMIN, "n", Command("quarantine", {"host": "pc0001"}))
    with pytest.raises(Exception):
        bus.execute(NETADMIN, "n", Command("quarantine", {"host": "ghost999"}))
    rows = bus.runtime.inventory.audit_rows()
    assert [(r["command"], r["outcome"].split(":")[0]) for r in rows] == \
        [("quarantine", "ok"), ("quarantine", "error")]
    assert rows[0]["actor"] == "n:netadmin"


def test_reads_not_audited(bus):
    bus.execute(NETADMIN, "n", Command("get_topology", {}))
    bus.execute(NETADMIN, "n", Command("locate", {"host": "pc0001"}))
    assert bus.runtime.inventory.audit_rows() == []


def test_idempotency_key_replays_cached_result(bus):
    cmd = Command("advance", {"duration": "1s"}, idempotency_key="adv-1")
    first = bus.execute(NETADMIN, "n", cmd)
    second = bus.execute(NETADMIN, "n", cmd)
    assert first is second                 # cached, not re-run
    assert len([r for r in bus.runtime.inventory.audit_rows()
                if r["command"] == "advance"]) == 1


# -- shell grammar ----------------------------------------------------------------


def test_shell_lines_map_to_commands():
    assert parse_shell_line("locate pc0001").op == "locate"
    cmd = parse_shell_line("port A11:1/1 vlan 30")
    assert cmd.op == "move_port_vlan"
    assert cmd.arguments == {"port": "A11:1/1", "vlan": "30"}
    cmd = parse_shell_line("ghost-start analyst a;vlan 901;"
                           "server ghostsrv1;member host:pc0001")
    assert cmd.op == "start_ghost"
    assert "vlan 901" in cmd.arguments["manifest"].splitlines()
    assert parse_shell_line("  # comment") is None
    assert parse_shell_line("") is None
    with pytest.raises(ScriptError):
        parse_shell_line("frobnicate everything")


def test_shell_renders_locate_and_errors(bus):
    out = io.StringIO()
    shell = CampusShell(bus, role="netadmin", stdout=out)
    shell.onecmd("locate pc0001")
    shell.onecmd("locate not-a-host")
    shell.onecmd("frobnicate")
    text = out.getvalue()
    assert "pc0001" in text
    assert "error" in text.lower()
    # shell failures never raise and never audit
    assert bus.runtime.inventory.audit_rows() == []


def test_shell_role_gate(bus):
    out = io.StringIO()
    shell = CampusShell(bus, role="servicedesk", stdout=out)
    shell.onecmd("fault link-down L1")
    assert "forbidden" in out.getvalue().lower()


# -- scenarios ---------------------------------------------------------------------


def test_empty_scenario_rejected(bus):
    with pytest.raises(ScriptError):
        bus.run_script(NETADMIN, "n", "")


def test_scenario_times_must_not_decrease(bus):
    text = ("topology builtin:campus\n"
            "at 2s topology\n"
            "at 1s topology\n")
    with pytest.raises(ScriptError):
        bus.run_script(NETADMIN, "n", text)


def test_scenario_report_formats_pass_fail(bus):
    text = ("topology builtin:campus\n"
            "at 1s topology\n"
            "assert spanning-tree\n")
    report = bus.run_script(NETADMIN, "n", text)
    assert report["passed"] is True
    assert "PASS" in format_report(report)


# -- HTTP API -----------------------------------------------------------------------


def _get(base, path, token=None):
    req = urllib.request.Request(base + path)
    if token:
        req.add_header("Authorization", f"Bearer {token}")
    with urllib.request.urlopen(req) as resp:
        return resp.status, json.loads(resp.read())


@pytest.fixture
def server(bus):
    srv, addr = serve_background(bus, "127.0.0.1:0")
    yield f"http://{addr}"
    srv.shutdown()


def test_api_open_mode_defaults_to_netadmin(server):
    status, doc = _get(server, "/topology")
    assert status == 200
    assert "nodes" in doc["result"]


def test_api_auth_enforced_with_token_table(bus, tmp_path):
    f = tmp_path / "tokens"
    f.write_text("deskkey servicedesk\n")
    srv, addr = serve_background(bus, "127.0.0.1:0", token_file=str(f))
    base = f"http://{addr}"
    try:
        with pytest.raises(urllib.error.HTTPError) as e:
            _get(base, "/topology")
        assert e.value.code == 401
        with pytest.raises(urllib.error.HTTPError) as e:
            _get(base, "/topology", token="wrongkey")
        assert e.value.code == 401
        status, _ = _get(base, "/ports", token="deskkey")
        assert status == 200
        # servicedesk may not see the sightings view
        with pytest.raises(urllib.error.HTTPError) as e:
            _get(base, "/views/sightings", token="deskkey")
        assert e.value.code == 403
    finally:
        srv.shutdown()


def test_api_unknown_target_is_404(server):
    with pytest.raises(urllib.error.HTTPError) as e:
        _get(server, "/hosts/not-a-host")
    assert e.value.code == 404


def test_api_post_and_idempotency(server):
    body = json.dumps({"vlan": 1}).encode()
    ref = urllib.parse.quote("S01:1/1", safe="")
    req = urllib.request.Request(
        f"{server}/ports/{ref}/vlan", data=body, method="POST",
        headers={"Content-Type": "application/json",
                 "Idempotency-Key": "move-1"})
    with urllib.request.urlopen(req) as resp:
        first = json.loads(resp.read())
    req2 = urllib.request.Request(
        f"{server}/ports/{ref}/vlan",
        data=json.dumps({"vlan": 30}).encode(), method="POST",
        headers={"Content-Type": "application/json",
                 "Idempotency-Key": "move-1"})
    with urllib.request.urlopen(req2) as resp:
        second = json.loads(resp.read())
    assert first == second                    # replayed, not re-applied
    status, ports = _get(server, "/ports?switch=S01")
    row = next(p for p in ports["result"] if p["ref"] == "S01:1/1")
    assert row["vlan"] == 1

import pytest

from campusnet import demo, simcore
from campusnet.fwengine import PatchSiteList
from campusnet.l2switch import Frame
from campusnet.monitoring import (
    FlowRecord,
    LinkFlapSignature,
    detect_spoof,
    format_choke_list,
    format_talker_report,
    recommend_choke,
    top_talkers,
)
from campusnet.runtime import CampusRuntime
from campusnet.topology import PortRef

SEC = simcore.NS_PER_SEC

PORT = PortRef("A11", 1, 1)


def signature(handshake_seen=False, macs=("02:11:00:00:00:01",)):
    return LinkFlapSignature(port=PORT, down_at=10 * SEC, up_at=40 * SEC,
                             post_up_macs=tuple(macs),
                             handshake_seen=handshake_seen)


def test_flap_with_silent_expected_mac_alerts_high():
    alert = detect_spoof(signature(), "02:11:00:00:00:01")
    assert alert is not None
    assert alert.confidence == "high"
    assert alert.mac == "02:11:00:00:00:01"


def test_handshake_suppresses_alert():
    assert detect_spoof(signature(handshake_seen=True),
                        "02:11:00:00:00:01") is None


def test_different_mac_after_flap_is_not_spoof():
    # sticky port security owns the different-MAC case
    assert detect_spoof(signature(macs=("02:99:00:00:00:01",)),
                        "02:11:00:00:00:01") is None


def test_ghost_session_demotes_to_low_confidence():
    alert = detect_spoof(signature(), "02:11:00:00:00:01",
                         ghost_vlans={901}, port_vlan=901)
    assert alert.confidence == "low"
    assert "ghost" in alert.reason


def test_signature_requires_ordered_flap():
    with pytest.raises(ValueError):
        LinkFlapSignature(port=PORT, down_at=40 * SEC, up_at=10 * SEC,
                          post_up_macs=(), handshake_seen=False)


# -- top talkers -----------------------------------------------------------------


SITES = PatchSiteList.from_text("17.0.0.0/8 Apple Computer\n")


def flows():
    return [
        FlowRecord("hog", "198.18.0.1", 900, 100, (0, 100)),
        FlowRecord("hog", "17.1.1.1", 5000, 50, (0, 100)),     # exempt
        FlowRecord("modest", "198.18.0.2", 300, 40, (0, 100)),
        FlowRecord("updater", "17.2.2.2", 8000, 10, (0, 100)),  # only exempt
        FlowRecord("late", "198.18.0.3", 700, 5, (150, 200)),
    ]


def test_patch_site_traffic_excluded_from_ranking():
    rows = top_talkers(flows(), (0, 120), 10, SITES)
    assert [r.host for r in rows] == ["hog", "modest"]
    hog = rows[0]
    assert hog.bytes_in == 900
    assert hog.exempt_bytes_in == 5000
    # updater only talked to a patch site: not ranked at all
    assert "updater" not in [r.host for r in rows]


def test_window_filter_excludes_outside_flows():
    rows = top_talkers(flows(), (0, 120), 10, SITES)
    assert "late" not in [r.host for r in rows]
    rows = top_talkers(flows(), None, 10, SITES)
    assert "late" in [r.host for r in rows]


def test_report_is_columnar():
    text = format_talker_report(top_talkers(flows(), None, 10, SITES))
    lines = text.splitlines()
    assert lines[0].split() == ["HOST", "BYTES_IN", "BYTES_OUT",
                                "EXEMPT_IN", "EXEMPT_OUT"]
    assert lines[1].startswith("hog")


def test_choke_recommendation_defaults_20_20():
    rows = top_talkers(flows(), None, 10, SITES)
    entries = recommend_choke(rows, threshold_bytes=500)
    assert [e.host for e in entries] == ["hog", "late"]
    assert all(e.avg_per_sec == 20 and e.burst == 20 for e in entries)
    listing = format_choke_list(entries)
    assert "hog 20 20\n" in listing


def test_choke_whitelist_exempts_partners():
    rows = top_talkers(flows(), None, 10, SITES)
    wl = PatchSiteList.from_text("198.51.100.0/24 partner\n")
    entries = recommend_choke(
        rows, threshold_bytes=500, whitelist=wl,
        resolver_names={"hog": "198.51.100.7"})
    assert [e.host for e in entries] == ["late"]


# -- swpvio feed ------------------------------------------------------------------


def test_swpvio_feed_joins_location(triangle_rt):
    rt = triangle_rt
    port = PortRef("A11", 1, 1)
    rt.fabric.ingress(port, Frame(src="02:11:00:00:00:01"))
    rt.fabric.ingress(port, Frame(src="02:66:00:00:00:66"))
    assert len(rt.swpvio.events) == 1
    event = rt.swpvio.events[0]
    assert event.jack == "J-811-1"
    assert event.room == "H-811"
    assert "room=H-811" in rt.swpvio.export()


def test_swpvio_feed_skips_suppressed_violations(triangle_rt):
    rt = triangle_rt
    port = PortRef("A11", 1, 1)
    rt.topo.port(port).security.mode = "protect"
    rt.fabric.ingress(port, Frame(src="02:11:00:00:00:01"))
    for i in range(5):
        rt.fabric.ingress(port, Frame(src=f"02:66:00:00:00:{60 + i:02x}"))
    assert rt.swpvio.events == []
    assert len(rt.swpvio.all_violations) == 5

"""Canonical demo topologies, generated as config text so the same
grammar exercises the loader.

`triangle` is the classic closet pair: two access switches uplinked to
the core stack plus a direct gigabit link between them; the core wins
root election and the direct link blocks.

`ring_campus` reproduces the 9-element core ring with vertically-matched
access pairs, one UPS feeding the upper row and another feeding the
lower row (plus the spare).

`campus` is the parametric desk-scale plant used for fuzz and scale
tests: two buildings, two core stacks, paired access switches, a
configurable host population, a wide VLAN registry, ghost VLANs and both
router pairs.
"""

from __future__ import annotations

RING_EDGES = "1-2,2-4,4-6,6-8,8-9,9-7,1-3,3-5,5-7"
UPPER_ROW = (1, 2, 4, 6)
LOWER_ROW = (3, 5, 7, 8, 9)

GHOST_VLANS = list(range(901, 911))


def _mac(prefix: int, n: int) -> str:
    return f"02:{prefix:02x}:{(n >> 24) & 255:02x}:{(n >> 16) & 255:02x}:" \
           f"{(n >> 8) & 255:02x}:{n & 255:02x}"


def triangle() -> str:
    lines = [
        "# triangle demo: paired access closet against the core stack",
        "ups upsA",
        "ups upsB",
        "vlan 1 name=default",
        "vlan 20 name=lab20 subnet=10.2.20.0/24",
        "vlan 901 name=ghost1 purpose=ghosting",
        "switch CORE kind=core-stack priority=4096 mac=02:00:00:00:00:01",
        "element CORE 1 ups=upsA",
        "element CORE 3 ups=upsB",
        "ring CORE 1-3",
        "port CORE:1/15 mode=trunk",
        "port CORE:3/15 mode=trunk",
        "switch A11 kind=access priority=32768 mac=02:00:00:00:0a:11",
        "element A11 1 ups=upsA",
        "port A11:1/25 mode=trunk",
        "port A11:1/26 mode=trunk",
        "switch A12 kind=access priority=32768 mac=02:00:00:00:0a:12",
        "element A12 1 ups=upsB",
        "port A12:1/25 mode=trunk",
        "port A12:1/26 mode=trunk",
        "link A11:1/25 CORE:1/15 class=gigabit",
        "link A12:1/25 CORE:3/15 class=gigabit",
        "link A11:1/26 A12:1/26 class=gigabit",
        "room H-811 building=H",
        "room H-812 building=H",
        "jack J-811-1 room=H-811",
        "jack J-812-1 room=H-812",
        "port A11:1/1 mode=access vlan=20 portfast=yes security=on "
        "secmode=restrict maxmacs=1",
        "port A12:1/1 mode=access vlan=20 portfast=yes security=on "
        "secmode=restrict maxmacs=1",
        "patch J-811-1 A11:1/1",
        "patch J-812-1 A12:1/1",
        "host h11 mac=02:11:00:00:00:01 ip=10.2.20.11 jack=J-811-1 "
        "managed=analyst rp=alice",
        "host h12 mac=02:12:00:00:00:01 ip=10.2.20.12 jack=J-812-1 "
        "managed=analyst rp=bob",
    ]
    return "\n".join(lines) + "\n"


def ring_campus() -> str:
    """The 9-element core ring with four vertically-matched access pairs."""
    lines = [
        "ups upsA",
        "ups upsB",
        "vlan 1 name=default",
        "vlan 20 name=labs subnet=10.2.20.0/24",
        "switch C1 kind=core-stack priority=4096 mac=02:00:00:00:00:01",
    ]
    for idx in UPPER_ROW:
        lines.append(f"element C1 {idx} ups=upsA")
    for idx in LOWER_ROW:
        lines.append(f"element C1 {idx} ups=upsB")
    lines.append(f"ring C1 {RING_EDGES}")
    lines.append("spare C1 9")
    # pairs on vertically matched elements and identical port numbers
    pairs = [
        ("A11", "A12", 1, 3, 15),
        ("A13", "A14", 2, 5, 9),
        ("A15", "A16", 4, 7, 11),
        ("A17", "A18", 6, 8, 13),
    ]
    n = 0
    for left, right, el_l, el_r, pnum in pairs:
        for name, el, ups in ((left, el_l, "upsA"), (right, el_r, "upsB")):
            n += 1
            lines += [
                f"switch {name} kind=access priority=32768 mac={_mac(0xaa, n)}",
                f"element {name} 1 ups={ups}",
                f"port {name}:1/25 mode=trunk",
                f"port {name}:1/26 mode=trunk",
                f"port C1:{el}/{pnum} mode=trunk",
                f"link {name}:1/25 C1:{el}/{pnum} class=gigabit",
            ]
        lines.append(f"link {left}:1/26 {right}:1/26 class=gigabit")
    return "\n".join(lines) + "\n"


def campus(n_hosts: int = 120, n_vlans: int = 20,
           hosts_per_switch: int = 40) -> str:
    """Parametric two-building plant with both router pairs.

    Host i lands on VLAN (100 + i % n_vlans) with subnet
    10.<vlan/256>.<vlan%256>.0/24; ghost VLANs 901-910 are registered
    with one ghost server host each (ghost servers sit on VLAN 100).
    """
    lines = ["ups upsA", "ups upsB", "vlan 1 name=default"]
    vlans = [100 + i for i in range(n_vlans)]
    for vid in vlans:
        lines.append(
            f"vlan {vid} name=v{vid} subnet=10.{vid // 256}.{vid % 256}.0/24")
    for vid in GHOST_VLANS:
        lines.append(f"vlan {vid} name=ghost{vid - 900} purpose=ghosting "
                     f"subnet=10.{vid // 256}.{vid % 256}.0/24")

    # two single-element cores joined by fibre, one per building
    lines += [
        "switch C1 kind=core-stack priority=4096 mac=02:00:00:00:00:01 building=H",
        "element C1 1 ups=upsA",
        "element C1 2 ups=upsB",
        "ring C1 1-2",
        "switch C2 kind=core-stack priority=8192 mac=02:00:00:00:00:02 building=E",
        "element C2 1 ups=upsA",
        "element C2 2 ups=upsB",
        "ring C2 1-2",
        "port C1:1/1 mode=trunk",
        "port C2:1/1 mode=trunk",
        "port C1:2/1 mode=trunk",
        "port C2:2/1 mode=trunk",
        "link C1:1/1 C2:1/1 class=gigabit",
        "link C1:2/1 C2:2/1 class=gigabit",
    ]

    n_switches = (n_hosts + len(GHOST_VLANS) + hosts_per_switch - 1) \
        // hosts_per_switch
    n_switches = max(n_switches, 2)
    switch_names = []
    for s in range(n_switches):
        name = f"S{s + 1:02d}"
        switch_names.append(name)
        building = "H" if s % 2 == 0 else "E"
        core = "C1" if building == "H" else "C2"
        el = 1 if s % 4 < 2 else 2
        lines += [
            f"switch {name} kind=access priority=32768 "
            f"mac={_mac(0xbb, s + 1)} building={building}",
            f"element {name} 1 ups={'upsA' if el == 1 else 'upsB'}",
            f"port {name}:1/49 mode=trunk",
            f"port C{1 if building == 'H' else 2}:{el}/{10 + s} mode=trunk",
            f"link {name}:1/49 {core}:{el}/{10 + s} class=gigabit",
            f"room R-{name} building={building}",
        ]

    def place(i, vlan, host_id, mac, ip, managed="analyst", role=""):
        sw = switch_names[i // hosts_per_switch]
        pnum = i % hosts_per_switch + 1
        jack = f"J-{sw}-{pnum}"
        out = [
            f"port {sw}:1/{pnum} mode=access vlan={vlan} portfast=yes "
            f"security=on secmode=restrict maxmacs=1",
            f"jack {jack} room=R-{sw}",
            f"patch {jack} {sw}:1/{pnum}",
            f"host {host_id} mac={mac} ip={ip} jack={jack} "
            f"managed={managed} rp=rp-{host_id}"
            + (f" role={role}" if role else ""),
        ]
        return out

    slot = 0
    for i in range(n_hosts):
        vid = vlans[i % n_vlans]
        ip = f"10.{vid // 256}.{vid % 256}.{10 + i // n_vlans}"
        lines += place(slot, vid, f"pc{i + 1:04d}", _mac(0xcc, i + 1), ip)
        slot += 1
    # one ghost server per ghost VLAN, parked on the first data VLAN
    for g, vid in enumerate(GHOST_VLANS):
        ip = f"10.0.100.{200 + g}"
        lines += place(slot, vlans[0], f"ghostsrv{g + 1}", _mac(0xdd, g + 1),
                       ip, role="ghost-server")
        slot += 1

    lines += [
        "router rint1 pair=internal role=primary ups=upsA",
        "router rint2 pair=internal role=secondary ups=upsB",
        "router rext1 pair=external role=primary ups=upsA",
        "router rext2 pair=external role=secondary ups=upsB",
    ]
    for vid in vlans + GHOST_VLANS:
        lines.append(f"gateway internal {vid} 10.{vid // 256}.{vid % 256}.1")
    return "\n".join(lines) + "\n"


BUILTIN = {
    "triangle": triangle,
    "ring-campus": ring_campus,
    "campus": campus,
}


def builtin_topology(name: str) -> str:
    if name.startswith("builtin:"):
        name = name.split(":", 1)[1]
    if name not in BUILTIN:
        raise KeyError(f"no builtin topology {name!r}")
    return BUILTIN[name]()

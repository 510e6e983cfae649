"""Relational inventory core: switches, ports, patches, jacks, rooms,
occupants, RP records, sightings, VLAN registry — kept in sync with the
live simulation and queryable by sister groups through named views.

Columns are partitioned into auto-maintained (written only by network
sync and sighting hooks) and manually-owned (written only by operator
edits); neither side ever writes the other's columns.

~15 relations stand in for the production schema; extension points are
marked in SCHEMA_SQL.
"""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass

from . import simcore
from .errors import Forbidden, UnknownHost, UnknownPort, UnknownView, Unpatched

SIGHTING_RETENTION = 90 * 24 * 3600 * simcore.NS_PER_SEC

SCHEMA_SQL = """
CREATE TABLE switch (
    id TEXT PRIMARY KEY,
    kind TEXT NOT NULL,
    building TEXT
);
CREATE TABLE stack_element (
    switch TEXT NOT NULL REFERENCES switch(id),
    idx INTEGER NOT NULL,
    ups TEXT,
    PRIMARY KEY (switch, idx)
);
CREATE TABLE port (
    ref TEXT PRIMARY KEY,
    switch TEXT NOT NULL REFERENCES switch(id),
    mode TEXT NOT NULL,
    vlan INTEGER,
    description TEXT DEFAULT '',
    auto_flag INTEGER DEFAULT 0
);
CREATE TABLE room (
    id TEXT PRIMARY KEY,
    building TEXT
);
CREATE TABLE jack (
    id TEXT PRIMARY KEY,
    room TEXT REFERENCES room(id)
);
CREATE TABLE patch (
    jack TEXT PRIMARY KEY REFERENCES jack(id),
    port TEXT UNIQUE REFERENCES port(ref)
);
CREATE TABLE occupant (
    room TEXT REFERENCES room(id),
    person TEXT,
    PRIMARY KEY (room, person)
);
CREATE TABLE host (
    id TEXT PRIMARY KEY,
    mac TEXT,
    ip TEXT,
    jack TEXT REFERENCES jack(id),
    managed TEXT DEFAULT 'user'
);
CREATE TABLE rp_record (
    host TEXT PRIMARY KEY REFERENCES host(id),
    person TEXT,
    contact TEXT
);
CREATE TABLE sighting (
    mac TEXT NOT NULL,
    port TEXT NOT NULL REFERENCES port(ref),
    last_seen INTEGER NOT NULL,
    PRIMARY KEY (mac, port)
);
CREATE TABLE vlan (
    id INTEGER PRIMARY KEY,
    name TEXT,
    purpose TEXT,
    owner TEXT
);
CREATE TABLE ghost_vlan (
    vlan INTEGER PRIMARY KEY REFERENCES vlan(id),
    analyst TEXT
);
CREATE TABLE quarantine (
    host TEXT PRIMARY KEY,
    since TEXT,
    reason TEXT
);
CREATE TABLE audit (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    actor TEXT,
    at INTEGER,
    command TEXT,
    arguments TEXT,
    outcome TEXT
);
-- extension point: wireless, dhcp leases, switch-config backups, tickets
"""

# column ownership: network sync and sighting hooks write only AUTO
# columns, operator edits write only MANUAL columns
AUTO_COLUMNS = {
    "port": {"mode", "vlan", "auto_flag"},  # description only when auto_flag
    "sighting": {"last_seen"},
    "vlan": {"name"},
    "ghost_vlan": {"analyst"},
}
MANUAL_COLUMNS = {
    "rp_record": {"person", "contact"},
    "room": {"building"},
    "occupant": {"person"},
    "host": {"jack", "managed"},
    "vlan": {"purpose", "owner"},
}

VIEWS = {
    "ports": "SELECT ref, switch, mode, vlan, description FROM port",
    "locations": (
        "SELECT host.id AS host, host.jack AS jack, jack.room AS room, "
        "room.building AS building, patch.port AS port "
        "FROM host LEFT JOIN jack ON host.jack = jack.id "
        "LEFT JOIN room ON jack.room = room.id "
        "LEFT JOIN patch ON patch.jack = host.jack"
    ),
    "quarantine_view": "SELECT host, since, reason FROM quarantine",
    "vlans": "SELECT id, name, purpose, owner FROM vlan",
    "ghost_vlans": "SELECT vlan, analyst FROM ghost_vlan",
    "rp": (
        "SELECT host.id AS host, rp_record.person, rp_record.contact "
        "FROM host LEFT JOIN rp_record ON rp_record.host = host.id"
    ),
    "sightings": "SELECT mac, port, last_seen FROM sighting",
}


@dataclass(frozen=True)
class LocationAnswer:
    host: str
    jack: str | None
    room: str | None
    building: str | None
    port: str | None
    vlan: int | None


class InventoryDB:
    def __init__(self, path: str = ":memory:"):
        # the control bus serializes all access behind one lock, so it is
        # safe to let API worker threads share the handle
        self.db = sqlite3.connect(path, check_same_thread=False)
        self.db.row_factory = sqlite3.Row
        self.db.executescript(SCHEMA_SQL)
        self.domain = "encs.example"

    def close(self) -> None:
        self.db.close()

    # -- bootstrap -------------------------------------------------------------

    def load_topology(self, topo) -> None:
        """Initial import; manual fields start empty and stay manual."""
        cur = self.db.cursor()
        for sw in topo.switches.values():
            cur.execute("INSERT OR REPLACE INTO switch VALUES (?,?,?)",
                        (sw.id, sw.kind, sw.building))
            for idx, el in sw.elements.items():
                cur.execute(
                    "INSERT OR REPLACE INTO stack_element VALUES (?,?,?)",
                    (sw.id, idx, el.ups))
            for port in sw.ports.values():
                cur.execute(
                    "INSERT OR REPLACE INTO port VALUES (?,?,?,?,?,?)",
                    (str(port.ref), sw.id, port.mode, port.vlan,
                     port.description, int(port.auto_flag)))
        for room in topo.rooms.values():
            cur.execute("INSERT OR REPLACE INTO room VALUES (?,?)",
                        (room.id, room.building))
        for jack in topo.jacks.values():
            cur.execute("INSERT OR REPLACE INTO jack VALUES (?,?)",
                        (jack.id, jack.room))
        for jack_id, ref in topo.patches.items():
            cur.execute("INSERT OR REPLACE INTO patch VALUES (?,?)",
                        (jack_id, str(ref)))
        for host in topo.hosts.values():
            cur.execute("INSERT OR REPLACE INTO host VALUES (?,?,?,?,?)",
                        (host.id, host.mac, host.ip, host.jack, host.managed))
            if host.rp:
                cur.execute(
                    "INSERT OR REPLACE INTO rp_record VALUES (?,?,?)",
                    (host.id, host.rp, f"{host.rp}@{self.domain}"))
        for vid, info in topo.vlans.items():
            cur.execute("INSERT OR REPLACE INTO vlan VALUES (?,?,?,?)",
                        (vid, info.get("name"), info.get("purpose"),
                         info.get("owner")))
        self.db.commit()

    # -- operations ------------------------------------------------------------

    def record_sighting(self, mac: str, port: str, at: int) -> bool:
        """Monotone upsert; auto-maintained descriptions follow the host.

        Returns False when a stale (earlier) timestamp is rejected."""
        cur = self.db.cursor()
        row = cur.execute("SELECT 1 FROM port WHERE ref=?", (port,)).fetchone()
        if row is None:
            raise UnknownPort(port)
        prev = cur.execute(
            "SELECT last_seen FROM sighting WHERE mac=? AND port=?",
            (mac, port)).fetchone()
        if prev is not None and prev["last_seen"] >= at:
            return False
        cur.execute(
            "INSERT INTO sighting VALUES (?,?,?) "
            "ON CONFLICT(mac, port) DO UPDATE SET last_seen=excluded.last_seen",
            (mac, port, at))
        hostrow = cur.execute(
            "SELECT id FROM host WHERE mac=?", (mac,)).fetchone()
        portrow = cur.execute(
            "SELECT description, auto_flag FROM port WHERE ref=?",
            (port,)).fetchone()
        if hostrow is not None and (
                portrow["auto_flag"] or not portrow["description"]):
            cur.execute(
                "UPDATE port SET description=?, auto_flag=1 WHERE ref=?",
                (f"[Auto] {hostrow['id']}.{self.domain}", port))
        self.db.commit()
        return True

    def prune_sightings(self, now: int) -> int:
        cur = self.db.execute(
            "DELETE FROM sighting WHERE last_seen < ?",
            (now - SIGHTING_RETENTION,))
        self.db.commit()
        return cur.rowcount

    def locate(self, host_id: str) -> LocationAnswer:
        cur = self.db.cursor()
        host = cur.execute(
            "SELECT * FROM host WHERE id=?", (host_id,)).fetchone()
        if host is None:
            raise UnknownHost(host_id)
        jack = host["jack"]
        if jack is None:
            raise Unpatched(f"{host_id} has no jack assignment")
        jackrow = cur.execute(
            "SELECT room FROM jack WHERE id=?", (jack,)).fetchone()
        room = jackrow["room"] if jackrow else None
        building = None
        if room:
            roomrow = cur.execute(
                "SELECT building FROM room WHERE id=?", (room,)).fetchone()
            building = roomrow["building"] if roomrow else None
        patch = cur.execute(
            "SELECT port FROM patch WHERE jack=?", (jack,)).fetchone()
        port = patch["port"] if patch else None
        # prefer the latest sighting over the static patch record
        sighting = cur.execute(
            "SELECT port FROM sighting WHERE mac=? "
            "ORDER BY last_seen DESC, port LIMIT 1", (host["mac"],)).fetchone()
        if sighting is not None:
            port = sighting["port"]
        vlan = None
        if port:
            prow = cur.execute(
                "SELECT vlan FROM port WHERE ref=?", (port,)).fetchone()
            vlan = prow["vlan"] if prow else None
        return LocationAnswer(host=host_id, jack=jack, room=room,
                              building=building, port=port, vlan=vlan)

    def query_view(self, view: str, filter: dict | None = None,
                   allowed_views: set | None = None) -> list[dict]:
        if allowed_views is not None and view not in allowed_views:
            raise Forbidden(f"view {view} not granted")
        sql = VIEWS.get(view)
        if sql is None:
            raise UnknownView(view)
        rows = [dict(r) for r in self.db.execute(sql)]
        for key, value in (filter or {}).items():
            rows = [r for r in rows if str(r.get(key)) == str(value)]
        return rows

    # -- network reconciliation ---------------------------------------------------

    def sync_from_network(self, snapshot: dict) -> dict:
        """Reconcile auto-owned columns against a simulator snapshot;
        manual fields are never touched.  Returns a change summary."""
        cur = self.db.cursor()
        changed = {"ports": 0, "vlans": 0, "ghost_vlans": 0}
        for ref, info in snapshot.get("ports", {}).items():
            row = cur.execute(
                "SELECT mode, vlan, description, auto_flag FROM port "
                "WHERE ref=?", (ref,)).fetchone()
            if row is None:
                switch = ref.split(":", 1)[0]
                cur.execute(
                    "INSERT INTO port VALUES (?,?,?,?,?,?)",
                    (ref, switch, info["mode"], info["vlan"], "", 0))
                changed["ports"] += 1
                continue
            desc = row["description"]
            if row["auto_flag"] and info["description"].startswith("[Auto]"):
                desc = info["description"]
            if (row["mode"], row["vlan"]) != (info["mode"], info["vlan"]) or \
                    desc != row["description"]:
                cur.execute(
                    "UPDATE port SET mode=?, vlan=?, description=? WHERE ref=?",
                    (info["mode"], info["vlan"], desc, ref))
                changed["ports"] += 1
        for vid, info in snapshot.get("vlans", {}).items():
            row = cur.execute(
                "SELECT name FROM vlan WHERE id=?", (int(vid),)).fetchone()
            if row is None:
                cur.execute("INSERT INTO vlan VALUES (?,?,?,?)",
                            (int(vid), info.get("name"), "", ""))
                changed["vlans"] += 1
            elif row["name"] != info.get("name"):
                cur.execute("UPDATE vlan SET name=? WHERE id=?",
                            (info.get("name"), int(vid)))
                changed["vlans"] += 1
        ghost = snapshot.get("ghost_vlans", {})
        cur.execute("DELETE FROM ghost_vlan")
        for vid, analyst in ghost.items():
            cur.execute("INSERT OR REPLACE INTO ghost_vlan VALUES (?,?)",
                        (int(vid), analyst))
            changed["ghost_vlans"] += 1
        self.db.commit()
        return changed

    def set_quarantine(self, entries) -> None:
        cur = self.db.cursor()
        cur.execute("DELETE FROM quarantine")
        for e in entries:
            cur.execute("INSERT OR REPLACE INTO quarantine VALUES (?,?,?)",
                        (e.hostname, e.date or "", e.vuln_tag or ""))
        self.db.commit()

    # -- manual edits ---------------------------------------------------------------

    def manual_update(self, table: str, key: dict, values: dict) -> None:
        """Operator-side writes; restricted to manually-owned columns."""
        allowed = MANUAL_COLUMNS.get(table, set())
        bad = set(values) - allowed
        if bad:
            raise Forbidden(
                f"columns {sorted(bad)} of {table} are not manually owned")
        sets = ", ".join(f"{c}=?" for c in values)
        where = " AND ".join(f"{c}=?" for c in key)
        self.db.execute(
            f"UPDATE {table} SET {sets} WHERE {where}",
            tuple(values.values()) + tuple(key.values()))
        self.db.commit()

    def audit_append(self, actor: str, at: int, command: str,
                     arguments: str, outcome: str) -> None:
        self.db.execute(
            "INSERT INTO audit (actor, at, command, arguments, outcome) "
            "VALUES (?,?,?,?,?)", (actor, at, command, arguments, outcome))
        self.db.commit()

    def audit_rows(self) -> list[dict]:
        return [dict(r) for r in self.db.execute(
            "SELECT * FROM audit ORDER BY id")]

    # -- import/export -----------------------------------------------------------------

    def export_relation(self, table: str) -> str:
        """Header-row tab-delimited dump of one relation."""
        cur = self.db.execute(f"SELECT * FROM {table}")
        cols = [d[0] for d in cur.description]
        lines = ["\t".join(cols)]
        for row in cur:
            lines.append("\t".join("" if v is None else str(v) for v in row))
        return "\n".join(lines) + "\n"

    def import_relation(self, table: str, text: str) -> int:
        lines = [l for l in text.splitlines() if l.strip()]
        cols = lines[0].split("\t")
        placeholders = ",".join("?" for _ in cols)
        n = 0
        for line in lines[1:]:
            values = [v if v != "" else None for v in line.split("\t")]
            self.db.execute(
                f"INSERT OR REPLACE INTO {table} ({','.join(cols)}) "
                f"VALUES ({placeholders})", values)
            n += 1
        self.db.commit()
        return n

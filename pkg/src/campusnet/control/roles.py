"""Role definitions and the static token table.

The delegation map reconstructs the usual split: the service desk clears
sticky ports and runs lookups, desktop support additionally drives
ghosting, and netadmin holds everything including faults and firewall
policy.  Authentication is a token-per-role file (one `<token> <role>`
pair per line) pointed to by CAMPUSNET_TOKEN_FILE.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

TOKEN_FILE_ENV = "CAMPUSNET_TOKEN_FILE"

READ_OPS = {
    "get_topology", "get_ports", "get_events", "query", "locate",
    "blocked_report",
}

SERVICEDESK_OPS = READ_OPS | {"clear_sticky"}
DESKTOP_OPS = SERVICEDESK_OPS | {
    "start_ghost", "distribute_ghost", "teardown_ghost",
}
NETADMIN_OPS = DESKTOP_OPS | {
    "move_port_vlan", "quarantine", "unquarantine", "inject_fault",
    "failover", "failback", "advance", "sync_inventory",
}

SERVICEDESK_VIEWS = {"ports", "locations", "quarantine_view", "rp"}
DESKTOP_VIEWS = SERVICEDESK_VIEWS | {"vlans", "ghost_vlans"}
NETADMIN_VIEWS = DESKTOP_VIEWS | {"sightings"}


@dataclass(frozen=True)
class Role:
    name: str
    allowed_ops: frozenset = field(default_factory=frozenset)
    allowed_views: frozenset = field(default_factory=frozenset)

    def permits(self, op: str) -> bool:
        return op in self.allowed_ops


ROLES = {
    "servicedesk": Role("servicedesk", frozenset(SERVICEDESK_OPS),
                        frozenset(SERVICEDESK_VIEWS)),
    "desktop": Role("desktop", frozenset(DESKTOP_OPS),
                    frozenset(DESKTOP_VIEWS)),
    "netadmin": Role("netadmin", frozenset(NETADMIN_OPS),
                     frozenset(NETADMIN_VIEWS)),
}


def load_token_table(path: str | None = None) -> dict[str, Role]:
    """Map bearer token -> Role; empty when unset (auth disabled)."""
    path = path or os.environ.get(TOKEN_FILE_ENV)
    if not path or not os.path.exists(path):
        return {}
    table = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            token, role_name = line.split()
            table[token] = ROLES[role_name]
    return table

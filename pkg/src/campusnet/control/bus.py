"""Serialized command bus: role check, single-writer execution, audit
entry per mutation, and idempotency-key replay protection.

Concurrent API clients all funnel through `execute`, which holds one
lock around the event loop — the simulator itself stays single-threaded.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

from ..errors import Forbidden, ScriptError, UnknownTarget
from ..runtime import CampusRuntime
from .roles import Role

MUTATING_OPS = {
    "move_port_vlan", "clear_sticky", "quarantine", "unquarantine",
    "start_ghost", "distribute_ghost", "teardown_ghost", "inject_fault",
    "failover", "failback", "advance", "sync_inventory",
}


@dataclass(frozen=True)
class Command:
    op: str
    arguments: dict
    idempotency_key: str | None = None


class CommandBus:
    def __init__(self, runtime: CampusRuntime):
        self.runtime = runtime
        self._lock = threading.Lock()
        self._idempotency: dict[str, dict] = {}
        self._handlers = {
            "get_topology": lambda rt, a: rt.topology_doc(),
            "get_ports": lambda rt, a: rt.ports_doc(a.get("switch")),
            "get_events": lambda rt, a: rt.events_since(int(a.get("since", 0))),
            "blocked_report": lambda rt, a: {"report": rt.blocked_report()},
            "locate": self._locate,
            "query": self._query,
            "move_port_vlan": lambda rt, a: rt.op_set_port_vlan(
                a["port"], int(a["vlan"])),
            "clear_sticky": lambda rt, a: rt.op_clear_sticky(a["port"]),
            "quarantine": lambda rt, a: rt.op_quarantine(
                a["host"], analyst=a.get("analyst"), date=a.get("date"),
                ip=a.get("ip"), vuln_tag=a.get("reason")),
            "unquarantine": lambda rt, a: rt.op_unquarantine(a["host"]),
            "start_ghost": lambda rt, a: rt.op_ghost_start(a["manifest"]),
            "distribute_ghost": lambda rt, a: rt.op_ghost_distribute(
                int(a["session"]), int(a["bytes"])),
            "teardown_ghost": lambda rt, a: rt.op_ghost_stop(int(a["session"])),
            "inject_fault": lambda rt, a: rt.op_fault(a["fault"]),
            "failover": lambda rt, a: rt.op_failover(a["pair"]),
            "failback": lambda rt, a: rt.op_failback(a["pair"]),
            "advance": self._advance,
            "sync_inventory": lambda rt, a: rt.sync_inventory(),
        }

    def known_op(self, op: str) -> bool:
        return op in self._handlers

    def execute(self, role: Role, actor: str, command: Command) -> dict:
        op = command.op
        if not self.known_op(op):
            raise UnknownTarget(f"unknown operation {op!r}")
        if not role.permits(op):
            raise Forbidden(f"role {role.name} may not {op}")
        with self._lock:
            key = command.idempotency_key
            if key is not None and key in self._idempotency:
                return self._idempotency[key]
            arguments = dict(command.arguments)
            if op == "query":
                arguments["_role"] = role
            try:
                result = self._handlers[op](self.runtime, arguments)
                outcome = "ok"
            except Exception as exc:
                outcome = f"error: {exc}"
                if op in MUTATING_OPS:
                    self._audit(actor, role, command, outcome)
                raise
            if op in MUTATING_OPS:
                self._audit(actor, role, command, outcome)
            wrapped = {"result": result}
            if key is not None:
                self._idempotency[key] = wrapped
            return wrapped

    def _audit(self, actor: str, role: Role, command: Command,
               outcome: str) -> None:
        self.runtime.inventory.audit_append(
            actor=f"{actor}:{role.name}",
            at=self.runtime.sim.clock,
            command=command.op,
            arguments=json.dumps(command.arguments, sort_keys=True),
            outcome=outcome,
        )

    def _advance(self, rt: CampusRuntime, args: dict) -> dict:
        from .. import simcore
        delay = simcore.duration(str(args["duration"]))
        rt.advance(delay)
        return {"clock": rt.sim.clock}

    # -- handlers with extra shaping -------------------------------------------

    def _locate(self, rt: CampusRuntime, args: dict) -> dict:
        answer = rt.inventory.locate(args["host"])
        return {
            "host": answer.host, "jack": answer.jack, "room": answer.room,
            "building": answer.building, "port": answer.port,
            "vlan": answer.vlan,
        }

    def _query(self, rt: CampusRuntime, args: dict) -> list[dict]:
        role: Role = args["_role"]
        view = args["view"]
        filt = {k: v for k, v in args.items()
                if k not in ("view", "_role")}
        return rt.inventory.query_view(
            view, filter=filt or None,
            allowed_views=set(role.allowed_views))

    def query_as(self, role: Role, actor: str, view: str,
                 filter: dict | None = None) -> list[dict]:
        args = dict(filter or {})
        args["view"] = view
        args["_role"] = role
        return self.execute(role, actor, Command("query", args))["result"]

    def run_script(self, role: Role, actor: str, text: str) -> dict:
        """Scenario scripts funnel through the same role checks."""
        from .scenario import run_scenario
        return run_scenario(self, role, actor, text)


def parse_shell_line(line: str) -> Command | None:
    """One shell command -> bus Command; None for blank/comment lines.

    Grammar mirrors the API ops:

        locate <host>
        ports [switch]
        topology
        events [since]
        view <name> [key=value ...]
        port <ref> vlan <id>
        clear-sticky <ref>
        quarantine <host> [reason]
        unquarantine <host>
        ghost-start <<manifest text on one line, ; for newlines>>
        ghost-distribute <session> <bytes>
        ghost-stop <session>
        fault <spec...>
        failover <pair> | failback <pair>
        advance <duration>
        blocked
        sync-inventory
    """
    line = line.strip()
    if not line or line.startswith("#"):
        return None
    words = line.split()
    head = words[0]
    if head == "locate":
        return Command("locate", {"host": words[1]})
    if head == "ports":
        return Command("get_ports",
                       {"switch": words[1]} if len(words) > 1 else {})
    if head == "topology":
        return Command("get_topology", {})
    if head == "events":
        return Command("get_events",
                       {"since": words[1]} if len(words) > 1 else {})
    if head == "view":
        args = {"view": words[1]}
        for token in words[2:]:
            k, _, v = token.partition("=")
            args[k] = v
        return Command("query", args)
    if head == "port" and len(words) == 4 and words[2] == "vlan":
        return Command("move_port_vlan", {"port": words[1], "vlan": words[3]})
    if head == "clear-sticky":
        return Command("clear_sticky", {"port": words[1]})
    if head == "quarantine":
        args = {"host": words[1]}
        if len(words) > 2:
            args["reason"] = " ".join(words[2:])
        return Command("quarantine", args)
    if head == "unquarantine":
        return Command("unquarantine", {"host": words[1]})
    if head == "ghost-start":
        manifest = " ".join(words[1:]).replace(";", "\n")
        return Command("start_ghost", {"manifest": manifest})
    if head == "ghost-distribute":
        return Command("distribute_ghost",
                       {"session": words[1], "bytes": words[2]})
    if head == "ghost-stop":
        return Command("teardown_ghost", {"session": words[1]})
    if head == "fault":
        return Command("inject_fault", {"fault": " ".join(words[1:])})
    if head == "failover":
        return Command("failover", {"pair": words[1]})
    if head == "failback":
        return Command("failback", {"pair": words[1]})
    if head == "advance":
        return Command("advance", {"duration": words[1]})
    if head == "blocked":
        return Command("blocked_report", {})
    if head == "sync-inventory":
        return Command("sync_inventory", {})
    raise ScriptError(f"unknown command {head!r}")

"""Interactive line shell over the command bus — the delegated-analyst
surface.  Every line maps 1:1 onto an API op; mutations are audited by
the bus like any other caller."""

from __future__ import annotations

import cmd
import json

from ..errors import Forbidden, ScriptError
from .bus import CommandBus, parse_shell_line
from .roles import ROLES, Role


class CampusShell(cmd.Cmd):
    intro = "campusnet shell — type 'help' for commands, 'quit' to leave."
    prompt = "campusnet> "

    def __init__(self, bus: CommandBus, role: Role | str = "netadmin",
                 actor: str = "shell", stdout=None):
        super().__init__(stdout=stdout)
        self.bus = bus
        self.role = ROLES[role] if isinstance(role, str) else role
        self.actor = actor
        self.last_result = None

    def default(self, line: str) -> bool | None:
        if line.strip() in ("quit", "exit", "EOF"):
            return True
        try:
            command = parse_shell_line(line)
        except (ScriptError, IndexError) as exc:
            self._print(f"usage error: {exc}")
            return None
        if command is None:
            return None
        try:
            out = self.bus.execute(self.role, self.actor, command)
        except Forbidden as exc:
            self._print(f"forbidden: {exc}")
            return None
        except Exception as exc:
            self._print(f"error: {exc}")
            return None
        self.last_result = out["result"]
        self._render(command.op, out["result"])
        return None

    def emptyline(self) -> bool:
        return False

    def do_help(self, _arg):
        self._print(parse_shell_line.__doc__)

    def do_quit(self, _arg) -> bool:
        return True

    do_EOF = do_quit

    # tab completion over known hosts/ports keeps desk use quick
    def completenames(self, text, *ignored):
        commands = ["locate", "ports", "topology", "events", "view", "port",
                    "clear-sticky", "quarantine", "unquarantine",
                    "ghost-start", "ghost-distribute", "ghost-stop", "fault",
                    "failover", "failback", "advance", "blocked", "quit"]
        return [c for c in commands if c.startswith(text)]

    def completedefault(self, text, line, *ignored):
        topo = self.bus.runtime.topo
        pool = list(topo.hosts) + [
            str(p.ref) for sw in topo.switches.values()
            for p in sw.ports.values()
        ]
        return [c for c in pool if c.startswith(text)]

    # -- output -------------------------------------------------------------------

    def _render(self, op: str, result) -> None:
        if op == "locate":
            self._print(
                f"{result['host']}: room {result['room']} jack "
                f"{result['jack']} port {result['port']} vlan {result['vlan']}")
        elif op == "blocked_report":
            self._print(result["report"])
        elif op == "get_ports":
            for row in result:
                self._print(
                    f"{row['ref']:<14} {row['mode']:<7} "
                    f"vlan={row['vlan'] if row['vlan'] is not None else '-':<5} "
                    f"{'up' if row['up'] else 'DOWN':<5} {row['stp_state']}")
        else:
            self._print(json.dumps(result, indent=2, sort_keys=True))

    def _print(self, text) -> None:
        print(text, file=self.stdout)

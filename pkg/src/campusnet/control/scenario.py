"""Scenario scripts: timed commands plus assertions, executed against a
runtime through the command bus so role checks and auditing apply.

Grammar (one statement per line, `#` comments):

    topology <builtin:name | file-path>     # optional header
    at <time> <shell command...>            # same grammar as the shell
    assert <check> [args...]

Checks:

    assert reachable-all
    assert reachable-survivors
    assert spanning-tree
    assert link <link-id> up|down|forwarding|blocking
    assert port <ref> forwarding|blocking|err-disabled|up
    assert no-stray-ghost-bytes
    assert delivery-complete <session-id>
    assert alert-count <alert-name> <count>
    assert quarantined <hostname> yes|no

Commands run in file order; `at` times must be non-decreasing.  The
report carries per-assertion pass/fail plus the full event log export,
which replay-determinism tests compare byte-for-byte.
"""

from __future__ import annotations

from dataclasses import dataclass

from .. import simcore
from ..errors import ScriptError
from ..stp import brute_force_spanning_tree_ok
from .bus import CommandBus, parse_shell_line
from .roles import Role


@dataclass
class AssertionResult:
    line_no: int
    text: str
    passed: bool
    detail: str = ""


def parse_scenario(text: str):
    """Returns (topology_ref or None, [(line_no, kind, payload)])."""
    topology = None
    statements = []
    last_at = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        words = line.split()
        if words[0] == "topology":
            topology = words[1]
        elif words[0] == "at":
            try:
                when = simcore.duration(words[1])
            except ValueError as exc:
                raise ScriptError(f"line {line_no}: {exc}")
            if when < last_at:
                raise ScriptError(f"line {line_no}: time goes backwards")
            last_at = when
            command_text = " ".join(words[2:])
            try:
                command = parse_shell_line(command_text)
            except (ScriptError, IndexError) as exc:
                raise ScriptError(f"line {line_no}: {exc}")
            if command is None:
                raise ScriptError(f"line {line_no}: empty command")
            statements.append((line_no, "at", (when, command)))
        elif words[0] == "assert":
            statements.append((line_no, "assert", words[1:]))
        else:
            raise ScriptError(f"line {line_no}: unknown statement {words[0]!r}")
    if not statements:
        raise ScriptError("scenario has no statements")
    return topology, statements


def run_scenario(bus: CommandBus, role: Role, actor: str, text: str) -> dict:
    _topology, statements = parse_scenario(text)
    runtime = bus.runtime
    results: list[AssertionResult] = []
    for line_no, kind, payload in statements:
        if kind == "at":
            when, command = payload
            if when > runtime.sim.clock:
                runtime.sim.run_until(when)
            bus.execute(role, actor, command)
        else:
            results.append(_check(runtime, line_no, payload))
    return {
        "assertions": results,
        "passed": all(r.passed for r in results),
        "log": runtime.sim.log.export(),
        "clock": runtime.sim.clock,
    }


def _check(runtime, line_no: int, words: list[str]) -> AssertionResult:
    text = " ".join(words)
    try:
        passed, detail = _evaluate(runtime, words)
    except Exception as exc:
        return AssertionResult(line_no, text, False, f"raised {exc!r}")
    return AssertionResult(line_no, text, passed, detail)


def _evaluate(runtime, words: list[str]) -> tuple[bool, str]:
    check = words[0]
    topo = runtime.topo
    if check == "reachable-all":
        ok = topo.all_switches_mutually_reachable(
            forwarding=runtime.stp.link_is_forwarding)
        return ok, "" if ok else "partition detected"
    if check == "reachable-survivors":
        survivors = {
            sw.id for sw in topo.switches.values()
            if any(not el.failed for el in sw.elements.values())
        }
        ok = topo.all_switches_mutually_reachable(
            switches=survivors, forwarding=runtime.stp.link_is_forwarding)
        return ok, "" if ok else "surviving switches partitioned"
    if check == "spanning-tree":
        ok = brute_force_spanning_tree_ok(topo, runtime.stp)
        return ok, "" if ok else "forwarding set is not a spanning tree"
    if check == "link":
        link = topo.links.get(words[1])
        if link is None:
            return False, f"no link {words[1]}"
        want = words[2]
        up = topo.link_effective_up(link)
        if want in ("up", "down"):
            return (up == (want == "up")), f"link is {'up' if up else 'down'}"
        forwarding = runtime.stp.link_is_forwarding(link)
        actual = "forwarding" if forwarding else ("blocking" if up else "down")
        return actual == want, f"link is {actual}"
    if check == "port":
        from ..topology import PortRef
        ref = PortRef.parse(words[1])
        port = topo.port(ref)
        want = words[2]
        if want == "err-disabled":
            return port.security.err_disabled, ""
        if want == "up":
            return runtime.fabric.port_is_up(ref), "port is down"
        return (port.stp.state == want,
                f"port state is {port.stp.state}")
    if check == "no-stray-ghost-bytes":
        stray = runtime.ghosts.stray_ghost_bytes()
        return not stray, f"stray bytes on {sorted(stray)[:3]}" if stray else ""
    if check == "delivery-complete":
        session = runtime.ghosts.sessions[int(words[1])]
        report = runtime.ghosts.delivery_report(session)
        short = [p for p, b in report["members"].items()
                 if b != report["bytes_total"]]
        return not short, f"incomplete on {short[:3]}" if short else ""
    if check == "alert-count":
        name, want = words[1], int(words[2])
        count = sum(
            1 for e in runtime.sim.log.entries
            if e.kind == "AlertRaised" and e.payload.get("alert") == name)
        return count == want, f"saw {count}"
    if check == "quarantined":
        host, want = words[1], words[2] == "yes"
        actual = any(e.hostname == host for e in runtime.quarantine)
        return actual == want, f"quarantined={actual}"
    raise ScriptError(f"unknown assertion {check!r}")


def format_report(report: dict) -> str:
    lines = []
    for r in report["assertions"]:
        status = "PASS" if r.passed else "FAIL"
        suffix = f" ({r.detail})" if r.detail and not r.passed else ""
        lines.append(f"{status} line {r.line_no}: assert {r.text}{suffix}")
    lines.append(
        f"{'ALL PASSED' if report['passed'] else 'FAILURES'} "
        f"— {len(report['assertions'])} assertions, "
        f"clock {simcore.fmt_time(report['clock'])}")
    return "\n".join(lines) + "\n"

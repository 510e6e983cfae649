"""Command-line entry point.

    campusnet serve    --topology builtin:campus --listen 127.0.0.1:8420
    campusnet shell    --topology builtin:triangle --role netadmin
    campusnet scenario path/to/script.scn
    campusnet report   --topology builtin:campus --out report/
    campusnet dump-fw  [--policy-dir DIR]

`--topology` accepts `builtin:<name>` (triangle, ring-campus, campus) or
a config file path.  `--seed` feeds the demo flow generator and figure
layout; the simulator itself is deterministic without it.
"""

from __future__ import annotations

import argparse
import pathlib
import sys

from . import demo
from .control.api import serve_forever
from .control.bus import CommandBus
from .control.roles import ROLES
from .control.scenario import format_report, parse_scenario
from .control.shell import CampusShell
from .fwengine import dump_ruleset
from .runtime import CampusRuntime


def _topology_text(ref: str) -> str:
    if ref.startswith("builtin:") or ref in demo.BUILTIN:
        return demo.builtin_topology(ref)
    return pathlib.Path(ref).read_text()


def _build_runtime(args) -> CampusRuntime:
    return CampusRuntime(
        _topology_text(args.topology),
        policy_dir=args.policy_dir,
        fast_timers=args.fast_timers,
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--topology", default="builtin:campus",
                        help="builtin:<name> or a topology config file")
    parser.add_argument("--policy-dir", default=None,
                        help="directory with policy source files "
                             "(defaults to the shipped profile)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--fast-timers", action="store_true", default=True,
                        help="collapse STP timers for interactive use")
    parser.add_argument("--real-timers", dest="fast_timers",
                        action="store_false",
                        help="use production STP timer values")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="campusnet")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the control API")
    _add_common(p_serve)
    p_serve.add_argument("--listen", default="127.0.0.1:8420")
    p_serve.add_argument("--token-file", default=None,
                         help="token table; defaults to CAMPUSNET_TOKEN_FILE")

    p_shell = sub.add_parser("shell", help="interactive operator shell")
    _add_common(p_shell)
    p_shell.add_argument("--role", default="netadmin",
                         choices=sorted(ROLES))

    p_scn = sub.add_parser("scenario", help="run a scenario script")
    _add_common(p_scn)
    p_scn.add_argument("script")
    p_scn.add_argument("--log-out", default=None,
                       help="also write the event log export here")

    p_rep = sub.add_parser("report", help="render reports and figures")
    _add_common(p_rep)
    p_rep.add_argument("--out", default="report")
    p_rep.add_argument("--flows", default=None,
                       help="tab-delimited flow file; omitted = demo flows")

    p_fw = sub.add_parser("dump-fw", help="print the compiled rulesets")
    _add_common(p_fw)

    args = parser.parse_args(argv)

    if args.command == "serve":
        runtime = _build_runtime(args)
        bus = CommandBus(runtime)
        print(f"campusnet control API on {args.listen}")
        serve_forever(bus, args.listen, args.token_file)
        return 0

    if args.command == "shell":
        runtime = _build_runtime(args)
        bus = CommandBus(runtime)
        CampusShell(bus, role=args.role).cmdloop()
        return 0

    if args.command == "scenario":
        text = pathlib.Path(args.script).read_text()
        topology_ref, _ = parse_scenario(text)
        if topology_ref is not None:
            args.topology = topology_ref
        runtime = _build_runtime(args)
        bus = CommandBus(runtime)
        report = bus.run_script(ROLES["netadmin"], "cli", text)
        sys.stdout.write(format_report(report))
        if args.log_out:
            pathlib.Path(args.log_out).write_text(report["log"])
        return 0 if report["passed"] else 1

    if args.command == "report":
        from . import reports

        runtime = _build_runtime(args)
        out = args.out
        written = [reports.write_topology_figure(
            runtime.topology_doc(), out, seed=args.seed)]
        if args.flows:
            flows = reports.load_flows(pathlib.Path(args.flows).read_text())
        else:
            flows = reports.demo_flows(sorted(runtime.topo.hosts),
                                       seed=args.seed)
        written += reports.write_talker_report(
            flows, runtime.patch_sites, out)
        written.append(reports.write_blocked_report(
            runtime.blocked_report(), out))
        for path in written:
            print(path)
        return 0

    if args.command == "dump-fw":
        runtime = _build_runtime(args)
        print(f"# internal ({runtime.fw_internal.active.rule_count()} rules, "
              f"version {runtime.fw_internal.active.version})")
        print(dump_ruleset(runtime.fw_internal.active))
        print(f"# external ({runtime.fw_external.active.rule_count()} rules, "
              f"version {runtime.fw_external.active.version})")
        print(dump_ruleset(runtime.fw_external.active))
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())

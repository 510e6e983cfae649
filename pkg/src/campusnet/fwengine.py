"""Chain-based packet filter: mark-at-prerouting, jumps to named chains,
quarantine, patch-site exceptions, rate-limit choking, SNAT, and a
conservative deny-all policy; plus the compiler from policy source files
with name pre-resolution and atomic ruleset swap.

Names are resolved at compile time only; evaluation never resolves names.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field, replace

from . import simcore
from .errors import (
    DuplicateChain,
    NoNatRule,
    ParseError,
    UnresolvedName,
    ValidationFailed,
)

BUILTIN_CHAINS = ("PREROUTING", "INPUT", "FORWARD", "OUTPUT", "POSTROUTING")
FORWARD_PATH = ("PREROUTING", "FORWARD", "POSTROUTING")

QUARANTINE_MARK = 0x2

_TOKEN_SCALE = 1_000_000_000  # one token == 1e9 integer units (ns-rate math)


def _nets(value):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [ipaddress.ip_network(v, strict=False) for v in value]
    return [ipaddress.ip_network(value, strict=False)]


class StaticResolver:
    """Compile-time name -> address-list map (pre-resolved DNS stand-in)."""

    def __init__(self, table: dict[str, list[str]] | None = None):
        self._table = {k: list(v) for k, v in (table or {}).items()}

    def add(self, name: str, *addrs: str) -> None:
        self._table.setdefault(name, []).extend(addrs)

    def resolve(self, name: str) -> list[str]:
        try:
            ipaddress.ip_address(name)
            return [name]
        except ValueError:
            pass
        addrs = self._table.get(name)
        if not addrs:
            raise UnresolvedName(name)
        return list(addrs)

    @classmethod
    def from_text(cls, text: str) -> "StaticResolver":
        """Lines of `<name> <addr> [addr...]`."""
        resolver = cls()
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ParseError(line_no, "want: <name> <addr> [addr...]")
            resolver.add(parts[0], *parts[1:])
        return resolver


class TokenBucket:
    """Continuous-refill bucket, computed lazily in integer arithmetic so
    accepted counts over integer schedules are exact."""

    def __init__(self, avg_per_sec: int, burst: int):
        self.avg_per_sec = avg_per_sec
        self.capacity = burst * _TOKEN_SCALE
        self.tokens = self.capacity  # initialized full
        self.last_update: simcore.SimTime = 0

    def check(self, at: simcore.SimTime) -> bool:
        """Refill for elapsed time; pass consumes one token."""
        if at > self.last_update:
            self.tokens = min(
                self.capacity,
                self.tokens + self.avg_per_sec * (at - self.last_update))
            self.last_update = at
        if self.tokens >= _TOKEN_SCALE:
            self.tokens -= _TOKEN_SCALE
            return True
        return False


@dataclass(frozen=True)
class Packet:
    src: str
    dst: str
    proto: str = "tcp"           # tcp | udp | icmp
    dport: int | None = None
    conn_state: str | None = None  # NEW | ESTABLISHED
    mark: int | None = None


@dataclass(frozen=True)
class Verdict:
    action: str                  # ACCEPT | DROP | REJECT
    reject_with: str | None = None
    snat_to: str | None = None


@dataclass
class Rule:
    target: str                  # ACCEPT DROP REJECT MARK JUMP RETURN SNAT
    src: list | None = None      # ip_network list; None = anywhere
    dst: list | None = None
    proto: str | None = None
    dport: int | None = None
    mark: int | None = None      # match on packet mark
    conn_state: str | None = None
    limit: TokenBucket | None = None
    # target parameters
    set_mark: int | None = None
    chain: str | None = None
    reject_with: str | None = None
    snat_to: str | None = None
    # display names kept from the policy source for dumps
    src_name: str | None = None
    dst_name: str | None = None

    def matches(self, pkt: Packet, mark: int | None, at: simcore.SimTime) -> bool:
        if self.proto is not None and self.proto != pkt.proto:
            return False
        if self.dport is not None and self.dport != pkt.dport:
            return False
        if self.mark is not None and self.mark != mark:
            return False
        if self.conn_state is not None and self.conn_state != pkt.conn_state:
            return False
        if self.src is not None:
            addr = ipaddress.ip_address(pkt.src)
            if not any(addr in net for net in self.src):
                return False
        if self.dst is not None:
            addr = ipaddress.ip_address(pkt.dst)
            if not any(addr in net for net in self.dst):
                return False
        if self.limit is not None and not self.limit.check(at):
            return False
        return True


@dataclass
class Ruleset:
    version: int = 0
    chains: dict[str, list[Rule]] = field(default_factory=dict)
    policy: dict[str, str] = field(default_factory=lambda: {
        "PREROUTING": "ACCEPT", "INPUT": "DROP", "FORWARD": "DROP",
        "OUTPUT": "ACCEPT", "POSTROUTING": "ACCEPT",
    })

    def __post_init__(self):
        for name in BUILTIN_CHAINS:
            self.chains.setdefault(name, [])

    def add_chain(self, name: str) -> None:
        if name in self.chains:
            raise DuplicateChain(name)
        self.chains[name] = []

    def validate(self) -> None:
        """Jump targets must exist and the chain graph must be a DAG."""
        for name, rules in self.chains.items():
            for rule in rules:
                if rule.target == "JUMP":
                    if rule.chain not in self.chains:
                        raise ValidationFailed(
                            f"{name}: jump to missing chain {rule.chain}")
                if rule.target == "REJECT":
                    flavor = rule.reject_with or "icmp-port-unreachable"
                    if flavor == "tcp-reset" and rule.proto not in (None, "tcp"):
                        raise ValidationFailed(
                            f"{name}: tcp-reset on proto {rule.proto}")
        color: dict[str, int] = {}

        def visit(chain: str, path: tuple):
            if color.get(chain) == 2:
                return
            if color.get(chain) == 1:
                raise ValidationFailed(
                    "jump cycle: " + " -> ".join(path + (chain,)))
            color[chain] = 1
            for rule in self.chains[chain]:
                if rule.target == "JUMP":
                    visit(rule.chain, path + (chain,))
            color[chain] = 2

        for name in self.chains:
            visit(name, ())

    def references(self, chain: str) -> int:
        return sum(
            1
            for rules in self.chains.values()
            for rule in rules
            if rule.target == "JUMP" and rule.chain == chain
        )

    def rule_count(self) -> int:
        return sum(len(rules) for rules in self.chains.values())


class FirewallEngine:
    """Holds the active ruleset; evaluation is pure given packet, time and
    bucket states, and every packet sees exactly one ruleset version."""

    def __init__(self, name: str = "fw"):
        self.name = name
        self.active: Ruleset | None = None
        self._version = 0

    def swap(self, ruleset: Ruleset) -> int:
        """Atomic activation: validate first; the old version stays active
        on failure."""
        ruleset.validate()
        self._version += 1
        ruleset.version = self._version
        self.active = ruleset
        return self._version

    def evaluate(self, pkt: Packet, at: simcore.SimTime = 0,
                 path=FORWARD_PATH) -> tuple[Verdict, list]:
        """First-match-wins walk with JUMP/RETURN; returns (verdict, trace).

        The trace lists every rule touched as (chain, index, action).
        """
        rs = self.active
        if rs is None:
            raise ValidationFailed("no active ruleset")
        trace: list[tuple[str, int, str]] = []
        mark = pkt.mark
        snat_to = None

        def walk(chain: str):
            nonlocal mark, snat_to
            for idx, rule in enumerate(rs.chains[chain]):
                if not rule.matches(pkt, mark, at):
                    continue
                trace.append((chain, idx, rule.target))
                if rule.target in ("ACCEPT", "DROP"):
                    return rule.target
                if rule.target == "REJECT":
                    return rule
                if rule.target == "MARK":
                    mark = rule.set_mark
                    continue
                if rule.target == "RETURN":
                    return None
                if rule.target == "SNAT":
                    snat_to = rule.snat_to
                    return "ACCEPT"
                if rule.target == "JUMP":
                    result = walk(rule.chain)
                    if result is not None:
                        return result
                    continue
            return None

        for hook in path:
            result = walk(hook)
            if result is None:
                result = rs.policy[hook]
                trace.append((hook, -1, f"policy:{result}"))
            if isinstance(result, Rule):
                flavor = result.reject_with or "icmp-port-unreachable"
                return Verdict("REJECT", reject_with=flavor), trace
            if result == "DROP":
                return Verdict("DROP"), trace
            # ACCEPT: continue to the next hook
        return Verdict("ACCEPT", snat_to=snat_to), trace


# -- policy source parsing ----------------------------------------------------


@dataclass(frozen=True)
class QuarantineEntry:
    hostname: str
    analyst: str | None = None
    date: str | None = None
    ip: str | None = None
    score: int | None = None
    os_tag: str | None = None
    vuln_tag: str | None = None


# `# <analyst> <date> <ip> <score> OS[...] <vuln> VULNERABLE`
_QMETA_RE = re.compile(
    r"^#\s*(\S+)\s+(\d{4}-\d{2}-\d{2})\s+(\S+)\s+(\d+)\s+OS\[([^]]*)\]\s+(\S+)\s+VULNERABLE\s*$"
)


def parse_quarantine(text: str) -> list[QuarantineEntry]:
    entries: list[QuarantineEntry] = []
    meta = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _QMETA_RE.match(line)
            meta = m.groups() if m else None
            continue
        if len(line.split()) != 1:
            raise ParseError(line_no, f"expected a hostname, got {line!r}")
        if meta:
            analyst, date, ip, score, os_tag, vuln = meta
            entries.append(QuarantineEntry(
                hostname=line, analyst=analyst, date=date, ip=ip,
                score=int(score), os_tag=os_tag, vuln_tag=vuln))
        else:
            entries.append(QuarantineEntry(hostname=line))
        meta = None
    return entries


@dataclass(frozen=True)
class PatchSite:
    cidr: str
    label: str


class PatchSiteList:
    """Ordered by descending netblock size (ascending prefix length)."""

    def __init__(self, entries: list[PatchSite]):
        self.entries = sorted(
            entries,
            key=lambda e: (ipaddress.ip_network(e.cidr).prefixlen, e.cidr))
        self._nets = [(ipaddress.ip_network(e.cidr), e) for e in self.entries]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def lookup(self, addr: str) -> PatchSite | None:
        ip = ipaddress.ip_address(addr)
        for net, entry in self._nets:
            if ip in net:
                return entry
        return None

    @classmethod
    def from_text(cls, text: str) -> "PatchSiteList":
        """Lines of `<cidr> <label...>`, `#` comments ignored."""
        entries = []
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line == "...":
                continue
            parts = line.split(None, 1)
            try:
                ipaddress.ip_network(parts[0], strict=False)
            except ValueError:
                raise ParseError(line_no, f"bad CIDR {parts[0]!r}")
            entries.append(PatchSite(
                cidr=parts[0],
                label=parts[1].strip() if len(parts) > 1 else ""))
        return cls(entries)


@dataclass(frozen=True)
class ChokeEntry:
    host: str                    # name or address
    avg_per_sec: int = 20
    burst: int = 20


def parse_chokes(text: str) -> list[ChokeEntry]:
    """Lines of `<host> [avg burst]`."""
    out = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 1:
            out.append(ChokeEntry(parts[0]))
        elif len(parts) == 3:
            out.append(ChokeEntry(parts[0], int(parts[1]), int(parts[2])))
        else:
            raise ParseError(line_no, "want: <host> [avg burst]")
    return out


@dataclass
class PolicyProfile:
    """Directives that shape the compiled ruleset (`profile` file)."""
    quarantine_mark: int = QUARANTINE_MARK
    local_subnets: list[str] = field(default_factory=list)
    dns_servers: list[str] = field(default_factory=list)
    antivirus: list[tuple[str, int]] = field(default_factory=list)  # (host, port)
    snat: list[tuple[str, str]] = field(default_factory=list)       # (from_cidr, to)
    allow: list[tuple] = field(default_factory=list)      # (src, dst, proto, dport)
    allow_ext: list[tuple] = field(default_factory=list)  # external-edge allows

    @classmethod
    def from_text(cls, text: str) -> "PolicyProfile":
        prof = cls()
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            kind = parts[0]
            try:
                if kind == "mark-quarantine":
                    prof.quarantine_mark = int(parts[1], 0)
                elif kind == "local-subnet":
                    prof.local_subnets.append(parts[1])
                elif kind == "dns-server":
                    prof.dns_servers.append(parts[1])
                elif kind == "antivirus":
                    host, port = parts[1].rsplit(":", 1)
                    prof.antivirus.append((host, int(port)))
                elif kind == "snat":
                    prof.snat.append((parts[2], parts[1]))
                elif kind in ("allow", "allow-ext"):
                    # allow <src|any> <dst|any> <proto|any> [dport]
                    dport = int(parts[4]) if len(parts) > 4 else None
                    entry = (parts[1], parts[2], parts[3], dport)
                    if kind == "allow":
                        prof.allow.append(entry)
                    else:
                        prof.allow_ext.append(entry)
                else:
                    raise ValueError(f"unknown directive {kind!r}")
            except (IndexError, ValueError) as exc:
                raise ParseError(line_no, str(exc))
        return prof


def compile_ruleset(
    quarantine: list[QuarantineEntry],
    patch_sites: PatchSiteList,
    chokes: list[ChokeEntry],
    outside_chokes: list[str],
    profile: PolicyProfile,
    resolver: StaticResolver,
) -> Ruleset:
    """Build the quarantine/patch-site/choke chain structure.

    A name resolving to k addresses expands to k rules.  All names are
    resolved here; the produced ruleset contains addresses only.
    """
    rs = Ruleset()
    mark = profile.quarantine_mark

    def resolved(name):
        return [(addr, name) for addr in resolver.resolve(name)]

    # conntrack fast path: established sessions pass without re-matching
    rs.chains["FORWARD"].append(Rule(target="ACCEPT", conn_state="ESTABLISHED"))

    # quarantine: mark at PREROUTING, confine at FORWARD
    if quarantine:
        rs.add_chain("qrntine")
        q = rs.chains["qrntine"]
        for subnet in profile.local_subnets:
            q.append(Rule(target="ACCEPT", dst=_nets(subnet)))
        for server in profile.dns_servers:
            for addr, name in resolved(server):
                q.append(Rule(target="ACCEPT", dst=_nets(addr), dst_name=name))
        for host, port in profile.antivirus:
            for addr, name in resolved(host):
                q.append(Rule(target="ACCEPT", proto="tcp", dport=port,
                              dst=_nets(addr), dst_name=name))
        rs.add_chain("patchSites")
        for site in patch_sites:
            rs.chains["patchSites"].append(
                Rule(target="ACCEPT", dst=_nets(site.cidr), dst_name=site.label))
        q.append(Rule(target="JUMP", chain="patchSites"))
        # tcp-reset precedes the catch-all icmp-port-unreachable
        q.append(Rule(target="REJECT", proto="tcp", reject_with="tcp-reset"))
        q.append(Rule(target="REJECT", reject_with="icmp-port-unreachable"))
        for entry in quarantine:
            for addr, name in resolved(entry.hostname):
                rs.chains["PREROUTING"].append(Rule(
                    target="MARK", set_mark=mark, src=_nets(addr),
                    src_name=name))
        rs.chains["FORWARD"].append(Rule(target="JUMP", chain="qrntine",
                                         mark=mark))

    # per-host chokes: chokeNNNNN chains off PREROUTING
    for i, choke in enumerate(chokes):
        chain = f"choke{i + 44:05d}"
        rs.add_chain(chain)
        rs.chains[chain].append(Rule(
            target="ACCEPT",
            limit=TokenBucket(choke.avg_per_sec, choke.burst)))
        rs.chains[chain].append(Rule(target="DROP"))
        for addr, name in resolved(choke.host):
            rs.chains["PREROUTING"].append(Rule(
                target="JUMP", chain=chain, dst=_nets(addr), dst_name=name))

    # outside chokes: one shared chain referenced from POSTROUTING
    if outside_chokes:
        rs.add_chain("chokeOutsides")
        rs.chains["chokeOutsides"].append(Rule(
            target="ACCEPT", limit=TokenBucket(100, 100)))
        rs.chains["chokeOutsides"].append(Rule(target="DROP"))
        for cidr in outside_chokes:
            rs.chains["POSTROUTING"].append(Rule(
                target="JUMP", chain="chokeOutsides", src=_nets(cidr)))

    # service allow-list feeding FORWARD, then implicit deny-all policy
    for src, dst, proto, dport in profile.allow:
        rule = Rule(target="ACCEPT",
                    proto=None if proto == "any" else proto,
                    dport=dport)
        if src != "any":
            addrs = resolver.resolve(src) if not _is_cidr(src) else [src]
            rule.src = _nets(addrs)
            rule.src_name = src
        if dst != "any":
            addrs = resolver.resolve(dst) if not _is_cidr(dst) else [dst]
            rule.dst = _nets(addrs)
            rule.dst_name = dst
        rs.chains["FORWARD"].append(rule)

    for from_cidr, to_addr in profile.snat:
        rs.chains["POSTROUTING"].append(Rule(
            target="SNAT", src=_nets(from_cidr), snat_to=to_addr))

    rs.validate()
    return rs


def _is_cidr(text: str) -> bool:
    try:
        ipaddress.ip_network(text, strict=False)
        return True
    except ValueError:
        return False


# -- conntrack-backed SNAT reversal ---------------------------------------------


class NatTable:
    """Records SNAT mappings so replies can be rewritten back."""

    def __init__(self):
        self._map: dict[tuple, str] = {}

    def apply(self, pkt: Packet, verdict: Verdict) -> Packet:
        if verdict.snat_to is None:
            raise NoNatRule(f"no SNAT rule for {pkt.src}")
        self._map[(verdict.snat_to, pkt.dst, pkt.proto, pkt.dport)] = pkt.src
        return replace(pkt, src=verdict.snat_to)

    def reverse(self, pkt: Packet) -> Packet:
        original = self._map.get((pkt.dst, pkt.src, pkt.proto, pkt.dport))
        if original is None:
            return pkt
        return replace(pkt, dst=original)


# -- dumps ----------------------------------------------------------------------


def _endpoint(nets, name) -> str:
    if name:
        return name
    if not nets:
        return "anywhere"
    out = []
    for net in nets:
        if net.prefixlen == net.max_prefixlen:
            out.append(str(net.network_address))
        else:
            out.append(str(net))
    return ",".join(out)


def dump_ruleset(rs: Ruleset) -> str:
    """Chain-listing layout for golden-file comparison."""
    lines = []
    ordered = [c for c in BUILTIN_CHAINS if rs.chains.get(c)] + sorted(
        c for c in rs.chains if c not in BUILTIN_CHAINS)
    for chain in ordered:
        if chain in BUILTIN_CHAINS:
            lines.append(f"Chain {chain} (policy {rs.policy[chain]})")
        else:
            lines.append(f"Chain {chain} ({rs.references(chain)} references)")
        lines.append("target     prot opt source               destination")
        for rule in rs.chains[chain]:
            target = rule.chain if rule.target == "JUMP" else rule.target
            prot = rule.proto or "all"
            src = _endpoint(rule.src, rule.src_name)
            dst = _endpoint(rule.dst, rule.dst_name)
            extras = []
            if rule.target == "MARK":
                extras.append(f"MARK set {rule.set_mark:#x}")
            if rule.mark is not None:
                extras.append(f"MARK match {rule.mark:#x}")
            if rule.dport is not None:
                extras.append(f"{prot} dpt:{rule.dport}")
            if rule.conn_state is not None:
                extras.append(f"state {rule.conn_state}")
            if rule.limit is not None:
                extras.append(
                    f"limit: avg {rule.limit.avg_per_sec}/sec "
                    f"burst {rule.limit.capacity // _TOKEN_SCALE}")
            if rule.target == "REJECT":
                extras.append(f"reject-with {rule.reject_with}")
            if rule.target == "SNAT":
                extras.append(f"to:{rule.snat_to}")
            row = f"{target:<10} {prot:<4} --  {src:<20} {dst:<20}"
            if extras:
                row += " " + " ".join(extras)
            lines.append(row.rstrip())
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def blocked_hosts_report(quarantine: list[QuarantineEntry],
                         blocked_sites: list[str] | None = None) -> str:
    """Service-desk view of quarantined machines and blocked outside sites."""
    lines = ["BLOCKED HOSTS", "============="]
    if not quarantine:
        lines.append("(none)")
    for e in quarantine:
        detail = " ".join(
            str(x) for x in (e.analyst, e.date, e.vuln_tag) if x)
        lines.append(f"{e.hostname:<32} {detail}".rstrip())
    if blocked_sites:
        lines += ["", "BLOCKED OUTSIDE SITES", "====================="]
        lines += blocked_sites
    return "\n".join(lines) + "\n"

"""Independent reference implementations the tests compare against.

These deliberately avoid sharing code with the package: the token bucket
uses exact Fraction arithmetic, flood sets use a from-scratch reachability
walk, and the conntrack timeout check is a one-liner restatement of the
documented rule.
"""

from __future__ import annotations

from fractions import Fraction

NS_PER_SEC = 1_000_000_000


class ReferenceTokenBucket:
    """Continuous-refill bucket in exact rational arithmetic."""

    def __init__(self, avg_per_sec: int, burst: int):
        self.rate = Fraction(avg_per_sec, NS_PER_SEC)  # tokens per ns
        self.capacity = Fraction(burst)
        self.tokens = Fraction(burst)
        self.last = 0

    def check(self, at_ns: int) -> bool:
        if at_ns > self.last:
            self.tokens = min(self.capacity,
                              self.tokens + self.rate * (at_ns - self.last))
            self.last = at_ns
        if self.tokens >= 1:
            self.tokens -= 1
            return True
        return False


def expected_flood_set(topo, fabric, ingress_ref, vlan):
    """Edge ports that must see a broadcast in `vlan` from `ingress_ref`:
    walk forwarding up links admitting the VLAN, then collect every up,
    forwarding, VLAN-member edge port; subtract the ingress."""
    reach = {ingress_ref.switch}
    frontier = [ingress_ref.switch]
    while frontier:
        sw_id = frontier.pop()
        for link in topo.links.values():
            if not topo.link_effective_up(link):
                continue
            pa, pb = topo.port(link.a), topo.port(link.b)
            if pa.stp.state != "forwarding" or pb.stp.state != "forwarding":
                continue
            if not pa.admits(vlan) or not pb.admits(vlan):
                continue
            for ref in (link.a, link.b):
                if ref.switch in reach:
                    other = link.other(ref).switch
                    if other not in reach:
                        reach.add(other)
                        frontier.append(other)
    out = set()
    for sw_id in reach:
        for port in topo.switches[sw_id].ports.values():
            if topo.link_for_port(port.ref) is not None:
                continue
            if not port.admits(vlan):
                continue
            if port.stp.state != "forwarding":
                continue
            if not fabric.port_is_up(port.ref):
                continue
            out.add(port.ref)
    out.discard(ingress_ref)
    return out


def conntrack_expired(state: str, last_seen: int, now: int) -> bool:
    ttl = 600 * NS_PER_SEC if state == "ESTABLISHED" else 60 * NS_PER_SEC
    return now - last_seen > ttl

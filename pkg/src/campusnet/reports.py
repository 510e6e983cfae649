"""Report rendering: tab-delimited tables with matplotlib figures next
to them, plus the topology map.

Everything lands in an output directory; figure filenames mirror the
delimited files they illustrate.
"""

from __future__ import annotations

import pathlib

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import networkx as nx  # noqa: E402

from .fwengine import PatchSiteList  # noqa: E402
from .monitoring import FlowRecord, TalkerRow, top_talkers  # noqa: E402


def load_flows(text: str) -> list[FlowRecord]:
    """Tab-delimited flow rows: src_host dst_addr bytes_in bytes_out start end."""
    flows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("src_host"):
            continue
        src, dst, b_in, b_out, start, end = line.split("\t")
        flows.append(FlowRecord(src, dst, int(b_in), int(b_out),
                                (int(start), int(end))))
    return flows


def flows_to_text(flows: list[FlowRecord]) -> str:
    """Inverse of `load_flows`, header row included."""
    lines = ["src_host\tdst_addr\tbytes_in\tbytes_out\tstart\tend"]
    for f in flows:
        lines.append(f"{f.src_host}\t{f.dst_addr}\t{f.bytes_in}"
                     f"\t{f.bytes_out}\t{f.window[0]}\t{f.window[1]}")
    return "\n".join(lines) + "\n"


def write_talker_report(flows: list[FlowRecord], patch_sites: PatchSiteList,
                        out_dir: str | pathlib.Path, n: int = 20,
                        window: tuple[int, int] | None = None) -> list[str]:
    """Write top-talkers.tsv plus top-talkers.png; returns written paths."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = top_talkers(flows, window, n, patch_sites)

    tsv_path = out_dir / "top-talkers.tsv"
    lines = ["host\tbytes_in\tbytes_out\texempt_in\texempt_out"]
    for row in rows:
        lines.append(f"{row.host}\t{row.bytes_in}\t{row.bytes_out}"
                     f"\t{row.exempt_bytes_in}\t{row.exempt_bytes_out}")
    tsv_path.write_text("\n".join(lines) + "\n")

    png_path = out_dir / "top-talkers.png"
    _talker_figure(rows, png_path)
    return [str(tsv_path), str(png_path)]


def _talker_figure(rows: list[TalkerRow], path: pathlib.Path) -> None:
    fig, ax = plt.subplots(figsize=(10, max(3, 0.4 * len(rows) + 1)))
    hosts = [r.host for r in rows][::-1]
    in_bytes = [r.bytes_in for r in rows][::-1]
    out_bytes = [r.bytes_out for r in rows][::-1]
    y = range(len(hosts))
    ax.barh([i + 0.2 for i in y], in_bytes, height=0.4, label="bytes in")
    ax.barh([i - 0.2 for i in y], out_bytes, height=0.4, label="bytes out")
    ax.set_yticks(list(y))
    ax.set_yticklabels(hosts, fontsize=8)
    ax.set_xlabel("bytes (patch-site traffic exempt)")
    ax.set_title("Top talkers")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


_EDGE_COLOR = {"forwarding": "tab:green", "blocking": "tab:orange",
               "down": "tab:red"}


def write_topology_figure(topology_doc: dict, out_dir: str | pathlib.Path,
                          seed: int = 0) -> str:
    """Render the switch graph with STP edge states color-coded."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = nx.MultiGraph()
    for node in topology_doc["nodes"]:
        graph.add_node(node["id"], kind=node["kind"])
    for edge in topology_doc["edges"]:
        a = edge["a"].split(":")[0]
        b = edge["b"].split(":")[0]
        graph.add_edge(a, b, state=edge["state"])
    pos = nx.spring_layout(graph, seed=seed)
    fig, ax = plt.subplots(figsize=(9, 7))
    core = [n for n, d in graph.nodes(data=True) if d["kind"] == "core-stack"]
    access = [n for n in graph.nodes if n not in core]
    nx.draw_networkx_nodes(graph, pos, nodelist=core, node_color="tab:blue",
                           node_size=900, ax=ax)
    nx.draw_networkx_nodes(graph, pos, nodelist=access,
                           node_color="tab:cyan", node_size=500, ax=ax)
    for state, color in _EDGE_COLOR.items():
        edges = [(u, v) for u, v, d in graph.edges(data=True)
                 if d["state"] == state]
        style = "dashed" if state != "forwarding" else "solid"
        nx.draw_networkx_edges(graph, pos, edgelist=edges, edge_color=color,
                               style=style, ax=ax)
    nx.draw_networkx_labels(graph, pos, font_size=8, ax=ax)
    root = topology_doc.get("root_bridge")
    ax.set_title(f"Campus topology (root bridge: {root})")
    ax.axis("off")
    fig.tight_layout()
    path = out_dir / "topology.png"
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return str(path)


def write_blocked_report(report_text: str,
                         out_dir: str | pathlib.Path) -> str:
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "blocked-hosts.txt"
    path.write_text(report_text)
    return str(path)


def demo_flows(hosts: list[str], seed: int = 0, n: int = 200) -> list[FlowRecord]:
    """Seeded synthetic flow set for the demo report path."""
    import random

    rng = random.Random(seed)
    externals = ["198.51.100.7", "203.0.113.99", "192.0.2.55",
                 "17.250.1.1", "131.107.5.5"]
    flows = []
    for _ in range(n):
        host = rng.choice(hosts)
        dst = rng.choice(externals)
        flows.append(FlowRecord(
            src_host=host, dst_addr=dst,
            bytes_in=rng.randrange(10_000, 5_000_000_000),
            bytes_out=rng.randrange(10_000, 500_000_000),
            window=(0, 3600)))
    return flows

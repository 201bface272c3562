"""Result rendering: display graphs, DOT export, JSON wire format.

Verbose mode shows one display edge per underlying event (padding with
the first timestamp where compression collapsed the list); normal mode
shows one edge per relation labeled with its count and contracts the
synthesized default thread/unit nodes so a process connects straight to
its resources.

Node fill colors follow the investigation step: 1 red, 2 white, 3 gray,
4 cyan, 5 green, then cycling; step 0 (plain store contents) is lightgray.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from urllib.parse import quote, unquote

from graalf.dates import ts_to_iso
from graalf.model import (
    EventEdge,
    ForensicGraph,
    NodeKind,
    ProvNode,
    SignatureKey,
    is_hierarchy,
    rel_label,
)

STEP_PALETTE = ["red", "white", "gray", "cyan", "green"]

_KIND_SHAPES = {
    NodeKind.PROCESS: "box",
    NodeKind.THREAD: "box",
    NodeKind.UNIT: "component",
    NodeKind.FILE: "ellipse",
    NodeKind.SOCKET: "diamond",
    NodeKind.PIPE: "cds",
}


def step_color(step: int) -> str:
    if step <= 0:
        return "lightgray"
    return STEP_PALETTE[(step - 1) % len(STEP_PALETTE)]


def sig_str(sig: SignatureKey) -> str:
    parts = (sig.host, sig.kind.value, sig.local_id, str(sig.epoch))
    return "|".join(quote(p, safe="/:.,()@ ") for p in parts)


def sig_from_str(text: str) -> SignatureKey:
    host, kind, local_id, epoch = (unquote(p) for p in text.split("|"))
    return SignatureKey(host, NodeKind(kind), local_id, int(epoch))


@dataclass
class DisplayNode:
    id: str
    kind: str
    title: str
    step: int
    color: str


@dataclass
class DisplayEdge:
    src: str
    dst: str
    label: str
    rel: str
    count: int = 1


@dataclass
class RenderedGraph:
    mode: str
    nodes: list[DisplayNode] = field(default_factory=list)
    edges: list[DisplayEdge] = field(default_factory=list)


def _contraction_map(g: ForensicGraph) -> dict[SignatureKey, SignatureKey]:
    """Map each synthesized default thread/unit to its nearest real ancestor."""
    parent: dict[SignatureKey, SignatureKey] = {}
    for (src, dst, rel) in g.edges:
        if is_hierarchy(rel):
            parent[dst] = src
    mapping: dict[SignatureKey, SignatureKey] = {}

    def rep(sig: SignatureKey) -> SignatureKey:
        if sig in mapping:
            return mapping[sig]
        node = g.nodes.get(sig)
        target = sig
        if (node is not None and node.attrs.get("synthetic") == "true"
                and sig in parent):
            target = rep(parent[sig])
        mapping[sig] = target
        return target

    for sig in g.nodes:
        rep(sig)
    return mapping


def render_graph(g: ForensicGraph, mode: str = "normal") -> RenderedGraph:
    out = RenderedGraph(mode=mode)
    if mode == "verbose":
        for sig in sorted(g.nodes, key=sig_str):
            node = g.nodes[sig]
            step = g.step_of.get(sig, 0)
            out.nodes.append(DisplayNode(sig_str(sig), sig.kind.value,
                                         node.title, step, step_color(step)))
        for key in sorted(g.edges, key=lambda k: (sig_str(k[0]), sig_str(k[1]), k[2])):
            edge = g.edges[key]
            shown = list(edge.timestamps)
            shown += [edge.timestamps[0]] * (edge.count - len(shown))
            for t in shown:
                out.edges.append(DisplayEdge(
                    sig_str(edge.src), sig_str(edge.dst),
                    f"{rel_label(edge.rel)} @ {ts_to_iso(t)}", edge.rel, 1))
        return out

    mapping = _contraction_map(g)
    kept = {sig for sig in g.nodes if mapping[sig] == sig}
    for sig in sorted(kept, key=sig_str):
        node = g.nodes[sig]
        step = g.step_of.get(sig, 0)
        out.nodes.append(DisplayNode(sig_str(sig), sig.kind.value,
                                     node.title, step, step_color(step)))
    seen: dict[tuple[str, str, str], DisplayEdge] = {}
    for key in sorted(g.edges, key=lambda k: (sig_str(k[0]), sig_str(k[1]), k[2])):
        edge = g.edges[key]
        src, dst = mapping[edge.src], mapping[edge.dst]
        if src == dst:
            continue  # hierarchy edge into a contracted synthetic node
        label = rel_label(edge.rel)
        if edge.count > 1:
            label = f"{label} ×{edge.count}"
        dkey = (sig_str(src), sig_str(dst), edge.rel)
        if dkey in seen:
            continue
        display = DisplayEdge(dkey[0], dkey[1], label, edge.rel, edge.count)
        seen[dkey] = display
        out.edges.append(display)
    return out


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(g: ForensicGraph, mode: str = "normal", name: str = "provenance") -> str:
    rendered = render_graph(g, mode)
    lines = [f"digraph {name} {{", "  rankdir=LR;",
             "  node [style=filled];"]
    ids = {}
    for i, node in enumerate(rendered.nodes):
        ids[node.id] = f"n{i}"
        shape = _KIND_SHAPES.get(NodeKind(node.kind), "ellipse")
        lines.append(
            f'  n{i} [label="{_dot_escape(node.title)}" shape={shape} '
            f'fillcolor="{node.color}"];')
    for edge in rendered.edges:
        src, dst = ids.get(edge.src), ids.get(edge.dst)
        if src is None or dst is None:
            continue
        lines.append(f'  {src} -> {dst} [label="{_dot_escape(edge.label)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_json(g: ForensicGraph) -> dict:
    """The wire format the API serves and the UI consumes."""
    nodes = []
    for sig in sorted(g.nodes, key=sig_str):
        node = g.nodes[sig]
        nodes.append({
            "sig": sig_str(sig),
            "kind": sig.kind.value,
            "title": node.title,
            "step": g.step_of.get(sig, 0),
            "attrs": dict(sorted(node.attrs.items())),
        })
    edges = []
    for key in sorted(g.edges, key=lambda k: (sig_str(k[0]), sig_str(k[1]), k[2])):
        edge = g.edges[key]
        edges.append({
            "src": sig_str(edge.src),
            "dst": sig_str(edge.dst),
            "rel": edge.rel,
            "count": edge.count,
            "timestamps": list(edge.timestamps),
        })
    return {"nodes": nodes, "edges": edges}


def graph_from_json(data: dict) -> ForensicGraph:
    g = ForensicGraph()
    for item in data.get("nodes", ()):
        sig = sig_from_str(item["sig"])
        g.add_node(ProvNode(sig, item["title"], dict(item.get("attrs", {}))),
                   step=item.get("step", 0))
    for item in data.get("edges", ()):
        g.put_edge(EventEdge(
            sig_from_str(item["src"]), sig_from_str(item["dst"]), item["rel"],
            [int(t) for t in item["timestamps"]], int(item.get("count", 1))))
    return g


def graph_to_json_text(g: ForensicGraph, indent: int | None = None) -> str:
    return json.dumps(graph_to_json(g), indent=indent, sort_keys=False)


def export_graph(g: ForensicGraph, fmt: str, path: str,
                 mode: str = "normal") -> str:
    """Write a result graph to disk as DOT or wire-format JSON; returns path."""
    if fmt == "dot":
        text = to_dot(g, mode)
    elif fmt == "json":
        text = graph_to_json_text(g, indent=2) + "\n"
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path

"""Core domain model for the provenance graph.

Everything the other layers exchange lives here: node identity
(signatures), causal edges with compressed timestamp lists, the per-record
line graph, and the mergeable graph container used both for store contents
and query results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple

HostId = str
Timestamp = int  # microseconds since the Unix epoch


class NodeKind(str, Enum):
    PROCESS = "process"
    THREAD = "thread"
    UNIT = "execution_unit"
    FILE = "file"
    SOCKET = "socket"
    PIPE = "pipe"


RESOURCE_KINDS = (NodeKind.FILE, NodeKind.SOCKET, NodeKind.PIPE)

# Relations are plain strings for hashing speed on the insert/traversal hot
# paths. The reserved "@" prefix keeps hierarchy links distinct from any
# syscall name (syscall names are lowercase identifiers).
Relation = str
SPAWN: Relation = "@spawn"
UNIT_OF: Relation = "@unit"


def is_hierarchy(rel: Relation) -> bool:
    return rel.startswith("@")


def rel_label(rel: Relation) -> str:
    """Human-readable label for an edge relation."""
    if rel == SPAWN:
        return "spawn"
    if rel == UNIT_OF:
        return "unit of"
    return rel


class FlowDirection(Enum):
    INTO_SUBJECT = "into_subject"    # resource -> subject (reads, accepts)
    OUT_OF_SUBJECT = "out_of_subject"  # subject -> resource (writes, creation)
    NEUTRAL = "neutral"              # state-table effect only, no causal edge


class CompressionLevel(str, Enum):
    C0 = "c0"  # every event is its own edge
    C1 = "c1"  # merge same-key edges, keep every timestamp
    C2 = "c2"  # merge, keep first and last timestamp
    C3 = "c3"  # merge, keep first timestamp only


class SignatureKey(NamedTuple):
    """Globally unique node identity: equal iff all four fields equal."""

    host: HostId
    kind: NodeKind
    local_id: str
    epoch: Timestamp


@dataclass
class ProvNode:
    """A system subject or object (process, thread, unit, file, socket, pipe)."""

    sig: SignatureKey
    title: str
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class EventEdge:
    """A causal relation between two nodes.

    ``timestamps`` is sorted ascending and never empty; how many of the
    underlying event times survive depends on the compression level.
    ``count`` is the number of underlying events and is always >=
    ``len(timestamps)``.
    """

    src: SignatureKey
    dst: SignatureKey
    rel: Relation
    timestamps: list[Timestamp]
    count: int = 1
    attrs: dict[str, str] = field(default_factory=dict)

    def key(self) -> tuple[SignatureKey, SignatureKey, Relation]:
        return (self.src, self.dst, self.rel)

    def first(self) -> Timestamp:
        return self.timestamps[0]

    def last(self) -> Timestamp:
        return self.timestamps[-1]

    def copy(self) -> "EventEdge":
        return EventEdge(self.src, self.dst, self.rel,
                         list(self.timestamps), self.count, dict(self.attrs))


@dataclass
class LineGraph:
    """The small path graph produced from one log record.

    At most 5 nodes (ancestor process, process, thread, execution unit,
    resource) and 4 edges. Nodes are ordered top of the hierarchy first;
    every edge connects adjacent listed levels. Hierarchy edges already
    known to the per-host state are omitted, so a line graph for a
    previously seen subject may carry fewer edges than nodes - 1.
    """

    nodes: list[ProvNode] = field(default_factory=list)
    edges: list[EventEdge] = field(default_factory=list)


EdgeKey = tuple[SignatureKey, SignatureKey, Relation]


@dataclass
class ForensicGraph:
    """Mergeable node/edge container for store contents and query results.

    ``step_of`` records the investigation step that introduced each node
    (0 for plain store contents).
    """

    nodes: dict[SignatureKey, ProvNode] = field(default_factory=dict)
    edges: dict[EdgeKey, EventEdge] = field(default_factory=dict)
    step_of: dict[SignatureKey, int] = field(default_factory=dict)

    def add_node(self, node: ProvNode, step: int = 0) -> None:
        existing = self.nodes.get(node.sig)
        if existing is None:
            self.nodes[node.sig] = ProvNode(node.sig, node.title, dict(node.attrs))
            self.step_of[node.sig] = step
        else:
            for k, v in node.attrs.items():
                existing.attrs.setdefault(k, v)
            if step < self.step_of.get(node.sig, step):
                self.step_of[node.sig] = step

    def add_edge(self, edge: EventEdge) -> None:
        existing = self.edges.get(edge.key())
        if existing is None:
            self.edges[edge.key()] = edge.copy()
        else:
            existing.timestamps = sorted(existing.timestamps + edge.timestamps)
            existing.count += edge.count
            for k, v in edge.attrs.items():
                existing.attrs.setdefault(k, v)

    def put_edge(self, edge: EventEdge) -> None:
        """Insert or replace by key (idempotent, unlike the merging add_edge)."""
        self.edges[edge.key()] = edge.copy()

    def is_empty(self) -> bool:
        return not self.nodes

    def node_sigs(self) -> set[SignatureKey]:
        return set(self.nodes)

    def edge_keys(self) -> set[EdgeKey]:
        return set(self.edges)


def merge_graphs(a: ForensicGraph, b: ForensicGraph) -> ForensicGraph:
    """Union of two graphs.

    Nodes are keyed by signature with attrs unioned (first writer wins);
    edges with an equal (src, dst, rel) key concatenate-and-sort their
    timestamps and sum counts (multiset union of the underlying events);
    step_of takes the minimum step.
    """
    out = ForensicGraph()
    for g in (a, b):
        for sig, node in g.nodes.items():
            out.add_node(node, g.step_of.get(sig, 0))
        for edge in g.edges.values():
            out.add_edge(edge)
    return out


class MissingIdentifier(ValueError):
    """Raised when a node's identifying attribute is absent."""


def node_signature(kind: NodeKind, host: HostId, raw: dict[str, str]) -> SignatureKey:
    """Build the deterministic identity key for a node.

    ``raw`` must carry the identifying attribute for the kind: pid for
    processes, tid for threads, a unit id for execution units, inode or
    path for files, addr/port for sockets, a pipe id for pipes.
    Subjects (process/thread/unit) take their first-seen time as epoch;
    resources are identified by path/inode or endpoint alone (epoch 0).
    """
    if kind is NodeKind.PROCESS:
        pid = raw.get("pid")
        if not pid:
            raise MissingIdentifier("process node needs a pid")
        return SignatureKey(host, kind, str(pid), int(raw.get("first_seen", 0)))
    if kind is NodeKind.THREAD:
        tid = raw.get("tid")
        if not tid:
            raise MissingIdentifier("thread node needs a tid")
        return SignatureKey(host, kind, str(tid), int(raw.get("first_seen", 0)))
    if kind is NodeKind.UNIT:
        unit = raw.get("unit")
        if not unit:
            tid, unit_id = raw.get("tid"), raw.get("unit_id")
            if not tid or not unit_id:
                raise MissingIdentifier("execution unit node needs a unit id")
            unit = f"{tid}.{unit_id}"
        return SignatureKey(host, kind, str(unit), int(raw.get("first_seen", 0)))
    if kind is NodeKind.FILE:
        path, inode = raw.get("path"), raw.get("inode")
        if not path and not inode:
            raise MissingIdentifier("file node needs a path or inode")
        local = f"{inode}:{path}" if inode and path else (path or str(inode))
        return SignatureKey(host, kind, local, 0)
    if kind is NodeKind.SOCKET:
        endpoint = raw.get("endpoint")
        if not endpoint:
            addr, port = raw.get("addr"), raw.get("port")
            if not addr or not port:
                raise MissingIdentifier("socket node needs an endpoint")
            endpoint = f"{addr}:{port}"
        return SignatureKey(host, kind, endpoint, 0)
    if kind is NodeKind.PIPE:
        pipe = raw.get("pipe") or raw.get("inode")
        if not pipe:
            raise MissingIdentifier("pipe node needs a pipe id")
        return SignatureKey(host, kind, str(pipe), 0)
    raise MissingIdentifier(f"unknown node kind {kind!r}")


# Syscall -> flow classification. Anything not listed is neutral (callers
# count those separately as skipped/unknown).
INTO_SUBJECT_SYSCALLS = frozenset({
    "read", "readv", "pread", "pread64", "recv", "recvfrom", "recvmsg",
    "accept", "accept4",
})
OUT_OF_SUBJECT_SYSCALLS = frozenset({
    "write", "writev", "pwrite", "pwrite64", "send", "sendto", "sendmsg",
    "connect", "unlink", "unlinkat", "rename", "renameat", "chmod", "fchmod",
})
CREATION_SYSCALLS = frozenset({"fork", "clone", "vfork", "execve"})
NEUTRAL_SYSCALLS = frozenset({"open", "openat", "close", "dup", "dup2", "dup3"})

KNOWN_SYSCALLS = (INTO_SUBJECT_SYSCALLS | OUT_OF_SUBJECT_SYSCALLS
                  | CREATION_SYSCALLS | NEUTRAL_SYSCALLS)


def flow_direction(rel: Relation) -> FlowDirection:
    """Classify a relation's information-flow direction.

    Total: unknown syscalls classify as neutral (the ingest layer counts
    them in its skip metric).
    """
    if is_hierarchy(rel):
        return FlowDirection.OUT_OF_SUBJECT
    if rel in INTO_SUBJECT_SYSCALLS:
        return FlowDirection.INTO_SUBJECT
    if rel in OUT_OF_SUBJECT_SYSCALLS or rel in CREATION_SYSCALLS:
        return FlowDirection.OUT_OF_SUBJECT
    return FlowDirection.NEUTRAL


def collapse_timestamps(timestamps: Iterable[Timestamp], count: int,
                        level: CompressionLevel) -> tuple[list[Timestamp], int]:
    """Reduce a full event-time list to what the given level retains."""
    ts = sorted(timestamps)
    if level in (CompressionLevel.C0, CompressionLevel.C1):
        return ts, max(count, len(ts))
    if level is CompressionLevel.C2:
        keep = [ts[0]] if len(ts) == 1 else [ts[0], ts[-1]]
        return keep, max(count, len(ts))
    return [ts[0]], max(count, len(ts))

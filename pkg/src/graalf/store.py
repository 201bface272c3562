"""In-memory graph store.

Three hash-map indexes (kind -> sig -> node, node-pair -> edges,
title -> sigs) plus derived forward/reverse adjacency, edge folding per
compression level, a pending-insertion queue with node/edge dedup, and
last-touched eviction under a memory estimate.

Concurrency: one writer, any number of readers; a store-level lock keeps
every query on a consistent snapshot (a query never observes a
half-inserted line graph).
"""

from __future__ import annotations

import re
import threading
from bisect import insort
from collections import deque
from dataclasses import dataclass, field

from graalf.dates import ts_matches
from graalf.model import (
    CompressionLevel,
    EdgeKey,
    EventEdge,
    LineGraph,
    NodeKind,
    ProvNode,
    SignatureKey,
    Timestamp,
    is_hierarchy,
)


@dataclass
class StoreConfig:
    level: CompressionLevel = CompressionLevel.C1
    memory_limit_bytes: int | None = None
    evict_threshold: float = 0.9

    def __post_init__(self) -> None:
        if not (0 < self.evict_threshold <= 1):
            raise ValueError("evict_threshold must be in (0, 1]")


@dataclass
class InsertReceipt:
    new_nodes: int = 0
    new_edges: int = 0
    merged_edges: int = 0

    def absorb(self, other: "InsertReceipt") -> None:
        self.new_nodes += other.new_nodes
        self.new_edges += other.new_edges
        self.merged_edges += other.merged_edges


@dataclass
class EvictReport:
    evicted: list[SignatureKey] = field(default_factory=list)
    usage_before: int = 0
    usage_after: int = 0


class CannotEvict(RuntimeError):
    """Every resident node is pinned by the pending-insertion queue."""


class KeyMismatch(ValueError):
    pass


def merge_edge(existing: EventEdge | None, incoming: EventEdge,
               level: CompressionLevel) -> EventEdge:
    """Fold an incoming edge into an existing same-key edge.

    C1 keeps every timestamp, C2 the first and last, C3 only the earliest
    first (count always accumulates). C0 never merges; calling this with
    an existing edge at C0 is a contract violation.
    """
    if existing is None:
        return incoming
    if existing.key() != incoming.key():
        raise KeyMismatch(f"{existing.key()} != {incoming.key()}")
    if level is CompressionLevel.C0:
        raise ValueError("C0 never merges; append instead")
    count = existing.count + incoming.count
    if level is CompressionLevel.C1:
        ts = sorted(existing.timestamps + incoming.timestamps)
    elif level is CompressionLevel.C2:
        lo = min(existing.first(), incoming.first())
        hi = max(existing.last(), incoming.last())
        ts = [lo] if lo == hi else [lo, hi]
    else:
        ts = [min(existing.first(), incoming.first())]
    return EventEdge(existing.src, existing.dst, existing.rel, ts, count,
                     dict(existing.attrs))


_REGEX_VALUE = re.compile(r"^/(.+)/$")
_regex_cache: dict[str, re.Pattern] = {}


def title_matches(op: str, value: str, title: str) -> bool:
    """`is` is exact; `has` is substring, or a regex when /delimited/."""
    if op == "is":
        return title == value
    m = _REGEX_VALUE.match(value)
    if m:
        pat = _regex_cache.get(value)
        if pat is None:
            try:
                pat = re.compile(m.group(1))
            except re.error:
                return value in title
            _regex_cache[value] = pat
        return pat.search(title) is not None
    return value in title


@dataclass
class NodeCriteria:
    """Node selection: kind filter, title predicates, attr equalities.

    ``kind`` None means wildcard; all predicate lists are AND-ed. A date
    predicate constrains nodes to those with an incident edge timestamp
    matching it (honoring ``edge_filter`` when the query names a syscall).
    """

    kind: NodeKind | None = None
    titles: list[tuple[str, str]] = field(default_factory=list)       # (op, value)
    file_titles: list[tuple[str, str]] = field(default_factory=list)  # implies kind file
    attrs: list[tuple[str, str, str]] = field(default_factory=list)   # (name, op, value)
    dates: list[tuple[str, str]] = field(default_factory=list)
    edge_filter: str | None = None

    def is_empty(self) -> bool:
        return (not self.titles and not self.file_titles
                and not self.attrs and not self.dates)


class GraphStore:
    """The in-memory causal graph with its query indexes."""

    def __init__(self, config: StoreConfig | None = None):
        self.config = config or StoreConfig()
        self.lock = threading.RLock()
        self.by_type: dict[NodeKind, dict[SignatureKey, ProvNode]] = {
            kind: {} for kind in NodeKind}
        self.by_pair: dict[tuple[SignatureKey, SignatureKey], list[EventEdge]] = {}
        self.by_title: dict[str, set[SignatureKey]] = {}
        self.adj_out: dict[SignatureKey, set[SignatureKey]] = {}
        self.adj_in: dict[SignatureKey, set[SignatureKey]] = {}
        self.last_touched: dict[SignatureKey, Timestamp] = {}
        self.usage_bytes = 0
        self.evicted_any = False
        self._min_ts: Timestamp | None = None
        self._queue: deque[LineGraph] = deque()
        self._queued_sigs: set[SignatureKey] = set()
        self._queued_edges: set[EdgeKey] = set()

    # -- sizes ----------------------------------------------------------------

    @staticmethod
    def _node_cost(node: ProvNode) -> int:
        return 64 + len(node.title) + sum(len(k) + len(v) for k, v in node.attrs.items())

    @staticmethod
    def _edge_cost(edge: EventEdge) -> int:
        return 48 + 8 * len(edge.timestamps) + sum(
            len(k) + len(v) for k, v in edge.attrs.items())

    @property
    def node_count(self) -> int:
        return sum(len(m) for m in self.by_type.values())

    @property
    def edge_count(self) -> int:
        return sum(len(edges) for edges in self.by_pair.values())

    @property
    def resident_min_ts(self) -> Timestamp | None:
        with self.lock:
            if self._min_ts is None and self.by_pair:
                self._min_ts = min(e.first() for edges in self.by_pair.values()
                                   for e in edges)
            return self._min_ts

    # -- insertion --------------------------------------------------------------

    def insert_line_graph(self, lg: LineGraph) -> InsertReceipt:
        with self.lock:
            receipt = self._apply(lg)
            self._maybe_evict()
            return receipt

    def _apply(self, lg: LineGraph) -> InsertReceipt:
        receipt = InsertReceipt()
        for node in lg.nodes:
            if self._upsert_node(node):
                receipt.new_nodes += 1
        for edge in lg.edges:
            outcome = self._fold_edge(edge)
            if outcome == "new":
                receipt.new_edges += 1
            elif outcome == "merged":
                receipt.merged_edges += 1
        return receipt

    def _upsert_node(self, node: ProvNode) -> bool:
        kind_map = self.by_type[node.sig.kind]
        existing = kind_map.get(node.sig)
        if existing is None:
            stored = ProvNode(node.sig, node.title, dict(node.attrs))
            kind_map[node.sig] = stored
            self.by_title.setdefault(stored.title, set()).add(node.sig)
            self.adj_out.setdefault(node.sig, set())
            self.adj_in.setdefault(node.sig, set())
            self.last_touched.setdefault(node.sig, node.sig.epoch)
            self.usage_bytes += self._node_cost(stored)
            return True
        # A placeholder title ("pid N", known only through a parent column)
        # upgrades once the real binary name is observed.
        if ("synthetic_title" in existing.attrs
                and "synthetic_title" not in node.attrs and node.title):
            self._retitle(existing, node.title)
            existing.attrs.pop("synthetic_title", None)
        for k, v in node.attrs.items():
            if k not in existing.attrs:
                existing.attrs[k] = v
                self.usage_bytes += len(k) + len(v)
        return False

    def _retitle(self, node: ProvNode, title: str) -> None:
        sigs = self.by_title.get(node.title)
        if sigs is not None:
            sigs.discard(node.sig)
            if not sigs:
                del self.by_title[node.title]
        self.usage_bytes += len(title) - len(node.title)
        node.title = title
        self.by_title.setdefault(title, set()).add(node.sig)

    def _fold_edge(self, edge: EventEdge) -> str:
        pair = (edge.src, edge.dst)
        edges = self.by_pair.get(pair)
        if edges is None:
            edges = []
            self.by_pair[pair] = edges
            self.adj_out.setdefault(edge.src, set()).add(edge.dst)
            self.adj_in.setdefault(edge.dst, set()).add(edge.src)

        self._touch(edge)

        if is_hierarchy(edge.rel):
            # Creation facts are idempotent at every level.
            for e in edges:
                if e.rel == edge.rel:
                    return "noop"
            stored = edge.copy()
            edges.append(stored)
            self.usage_bytes += self._edge_cost(stored)
            return "new"

        if self.config.level is CompressionLevel.C0:
            stored = edge.copy()
            edges.append(stored)
            self.usage_bytes += self._edge_cost(stored)
            return "new"

        for i, e in enumerate(edges):
            if e.rel == edge.rel:
                before = self._edge_cost(e)
                if (self.config.level is CompressionLevel.C1
                        and len(edge.timestamps) == 1):
                    ts = edge.timestamps[0]
                    if not e.timestamps or ts >= e.timestamps[-1]:
                        e.timestamps.append(ts)
                    else:
                        insort(e.timestamps, ts)
                    e.count += edge.count
                else:
                    edges[i] = e = merge_edge(e, edge, self.config.level)
                self.usage_bytes += self._edge_cost(e) - before
                return "merged"
        stored = edge.copy()
        edges.append(stored)
        self.usage_bytes += self._edge_cost(stored)
        return "new"

    def _touch(self, edge: EventEdge) -> None:
        last = edge.timestamps[-1]
        if self.last_touched.get(edge.src, -1) < last:
            self.last_touched[edge.src] = last
        if self.last_touched.get(edge.dst, -1) < last:
            self.last_touched[edge.dst] = last
        first = edge.timestamps[0]
        if self._min_ts is None or first < self._min_ts:
            self._min_ts = first

    # -- pending-insertion queue -----------------------------------------------

    def enqueue(self, lg: LineGraph) -> bool:
        """Buffer a line graph; duplicate node sigs / edge keys are not re-queued.

        Returns False when nothing new was pending (fully duplicate).
        """
        with self.lock:
            nodes = [n for n in lg.nodes if n.sig not in self._queued_sigs]
            edges = [e for e in lg.edges if e.key() not in self._queued_edges]
            if not nodes and not edges:
                return False
            for n in nodes:
                self._queued_sigs.add(n.sig)
            for e in edges:
                self._queued_edges.add(e.key())
            self._queue.append(LineGraph(nodes, edges))
            return True

    def drain(self, limit: int | None = None) -> InsertReceipt:
        """Apply pending line graphs to the indexes (all of them by default)."""
        receipt = InsertReceipt()
        with self.lock:
            n = len(self._queue) if limit is None else min(limit, len(self._queue))
            for _ in range(n):
                lg = self._queue.popleft()
                for node in lg.nodes:
                    self._queued_sigs.discard(node.sig)
                for edge in lg.edges:
                    self._queued_edges.discard(edge.key())
                receipt.absorb(self._apply(lg))
            self._maybe_evict()
        return receipt

    @property
    def pending(self) -> int:
        return len(self._queue)

    # -- selection ----------------------------------------------------------------

    def select_nodes(self, criteria: NodeCriteria) -> list[ProvNode]:
        with self.lock:
            return [n for n in self._candidates(criteria) if self._matches(n, criteria)]

    def _candidates(self, criteria: NodeCriteria):
        if criteria.kind is not None:
            return list(self.by_type[criteria.kind].values())
        if criteria.file_titles and not criteria.titles:
            return list(self.by_type[NodeKind.FILE].values())
        if criteria.titles:
            op, value = criteria.titles[0]
            if op == "is":
                sigs = self.by_title.get(value, set())
                return [self._node(s) for s in sigs]
            return [self._node(s) for title, sigs in self.by_title.items()
                    if title_matches(op, value, title) for s in sigs]
        out = []
        for kind_map in self.by_type.values():
            out.extend(kind_map.values())
        return out

    def _node(self, sig: SignatureKey) -> ProvNode:
        return self.by_type[sig.kind][sig]

    def _matches(self, node: ProvNode, criteria: NodeCriteria) -> bool:
        for op, value in criteria.titles:
            if not title_matches(op, value, node.title):
                return False
        if criteria.file_titles:
            if node.sig.kind is not NodeKind.FILE:
                return False
            for op, value in criteria.file_titles:
                if not title_matches(op, value, node.title):
                    return False
        for name, op, value in criteria.attrs:
            attr = node.attrs.get(name)
            if attr is None:
                return False
            if op == "is" and attr != value:
                return False
            if op == "has" and not title_matches("has", value, attr):
                return False
        for date in criteria.dates:
            if not self._incident_edge_matches(node.sig, date, criteria.edge_filter):
                return False
        return True

    def _incident_edge_matches(self, sig: SignatureKey, date: tuple[str, str],
                               edge_filter: str | None) -> bool:
        op, value = date
        for edge in self.incident_edges(sig):
            if edge_filter and edge.rel != edge_filter:
                continue
            if any(ts_matches(op, value, t) for t in edge.timestamps):
                return True
        return False

    def select_edges(self, sigs: set[SignatureKey],
                     edge_filter: str | None = None) -> list[EventEdge]:
        """Edges between already-selected nodes, merged per (src, dst, rel)."""
        with self.lock:
            out: dict[EdgeKey, EventEdge] = {}
            for src in sigs:
                for dst in self.adj_out.get(src, ()):
                    if dst not in sigs:
                        continue
                    for edge in self.by_pair.get((src, dst), ()):
                        if edge_filter is not None and edge.rel != edge_filter:
                            continue
                        _merge_into(out, edge)
            return list(out.values())

    # -- traversal views -------------------------------------------------------

    def edges_into(self, sig: SignatureKey) -> list[EventEdge]:
        with self.lock:
            out: dict[EdgeKey, EventEdge] = {}
            for src in self.adj_in.get(sig, ()):
                for edge in self.by_pair.get((src, sig), ()):
                    _merge_into(out, edge)
            return list(out.values())

    def edges_out_of(self, sig: SignatureKey) -> list[EventEdge]:
        with self.lock:
            out: dict[EdgeKey, EventEdge] = {}
            for dst in self.adj_out.get(sig, ()):
                for edge in self.by_pair.get((sig, dst), ()):
                    _merge_into(out, edge)
            return list(out.values())

    def incident_edges(self, sig: SignatureKey) -> list[EventEdge]:
        return self.edges_into(sig) + self.edges_out_of(sig)

    def get_node(self, sig: SignatureKey) -> ProvNode | None:
        with self.lock:
            return self.by_type[sig.kind].get(sig)

    def all_nodes(self) -> list[ProvNode]:
        with self.lock:
            out = []
            for kind_map in self.by_type.values():
                out.extend(kind_map.values())
            return out

    def all_edges(self) -> list[EventEdge]:
        with self.lock:
            return [e for edges in self.by_pair.values() for e in edges]

    def load_direct(self, nodes: list[ProvNode], edges: list[EventEdge]) -> None:
        """Populate a fresh store verbatim (snapshot import: no re-folding)."""
        with self.lock:
            for node in nodes:
                self._upsert_node(node)
            for edge in edges:
                pair = (edge.src, edge.dst)
                bucket = self.by_pair.setdefault(pair, [])
                self.adj_out.setdefault(edge.src, set()).add(edge.dst)
                self.adj_in.setdefault(edge.dst, set()).add(edge.src)
                stored = edge.copy()
                bucket.append(stored)
                self.usage_bytes += self._edge_cost(stored)
                self._touch(stored)

    # -- eviction -----------------------------------------------------------------

    def _maybe_evict(self) -> EvictReport | None:
        cfg = self.config
        if cfg.memory_limit_bytes is None:
            return None
        threshold = cfg.evict_threshold * cfg.memory_limit_bytes
        if self.usage_bytes <= threshold:
            return None
        return self.evict_oldest()

    def evict_oldest(self) -> EvictReport:
        """Remove least-recently-touched nodes until usage is at threshold."""
        with self.lock:
            cfg = self.config
            report = EvictReport(usage_before=self.usage_bytes)
            if cfg.memory_limit_bytes is None:
                report.usage_after = self.usage_bytes
                return report
            target = cfg.evict_threshold * cfg.memory_limit_bytes
            pinned = self._queued_sigs
            candidates = sorted(
                (sig for sig in self.last_touched if sig not in pinned),
                key=lambda s: (self.last_touched[s], s))
            if not candidates and self.usage_bytes > target:
                raise CannotEvict("all resident nodes are queue-pinned")
            for sig in candidates:
                if self.usage_bytes <= target:
                    break
                self._remove_node(sig)
                report.evicted.append(sig)
            if report.evicted:
                self.evicted_any = True
                self._min_ts = None
            report.usage_after = self.usage_bytes
            return report

    def remove_nodes(self, sigs: list[SignatureKey]) -> None:
        """Drop specific nodes with their incident edges (test/maintenance aid)."""
        with self.lock:
            for sig in sigs:
                self._remove_node(sig)
            if sigs:
                self.evicted_any = True
                self._min_ts = None

    def _remove_node(self, sig: SignatureKey) -> None:
        node = self.by_type[sig.kind].pop(sig, None)
        if node is None:
            return
        self.usage_bytes -= self._node_cost(node)
        sigs = self.by_title.get(node.title)
        if sigs is not None:
            sigs.discard(sig)
            if not sigs:
                del self.by_title[node.title]
        for dst in self.adj_out.pop(sig, set()):
            self._drop_pair((sig, dst))
            self.adj_in.get(dst, set()).discard(sig)
        for src in self.adj_in.pop(sig, set()):
            self._drop_pair((src, sig))
            self.adj_out.get(src, set()).discard(sig)
        self.last_touched.pop(sig, None)

    def _drop_pair(self, pair: tuple[SignatureKey, SignatureKey]) -> None:
        edges = self.by_pair.pop(pair, None)
        if edges:
            self.usage_bytes -= sum(self._edge_cost(e) for e in edges)

    # -- maintenance ---------------------------------------------------------------

    def check_consistency(self) -> list[str]:
        """Full index audit; returns human-readable problems (empty = healthy)."""
        problems = []
        with self.lock:
            sigs = {sig for kind_map in self.by_type.values() for sig in kind_map}
            for title, title_sigs in self.by_title.items():
                for sig in title_sigs:
                    node = self.by_type[sig.kind].get(sig)
                    if node is None:
                        problems.append(f"by_title orphan {title!r}: {sig}")
                    elif node.title != title:
                        problems.append(f"by_title stale {title!r} for {sig}")
            for sig in sigs:
                node = self._node(sig)
                if sig not in self.by_title.get(node.title, set()):
                    problems.append(f"node missing from by_title: {sig}")
            for (src, dst), edges in self.by_pair.items():
                if src not in sigs or dst not in sigs:
                    problems.append(f"dangling pair {src} -> {dst}")
                if not edges:
                    problems.append(f"empty pair bucket {src} -> {dst}")
                if dst not in self.adj_out.get(src, set()):
                    problems.append(f"adj_out missing {src} -> {dst}")
                if src not in self.adj_in.get(dst, set()):
                    problems.append(f"adj_in missing {src} -> {dst}")
            for src, dsts in self.adj_out.items():
                for dst in dsts:
                    if (src, dst) not in self.by_pair:
                        problems.append(f"adj_out stale {src} -> {dst}")
            if self.usage_bytes < 0:
                problems.append(f"negative usage estimate {self.usage_bytes}")
        return problems


def _merge_into(out: dict[EdgeKey, EventEdge], edge: EventEdge) -> None:
    key = edge.key()
    existing = out.get(key)
    if existing is None:
        out[key] = edge.copy()
    else:
        existing.timestamps = sorted(existing.timestamps + edge.timestamps)
        existing.count += edge.count

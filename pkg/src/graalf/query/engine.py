"""Query execution: seed selection, temporally pruned BFS, result assembly.

Traversal is breadth-first over per-node reference times. Backward, a
frame's ref is the latest admissible influence time; an edge is admitted
if it carries an event at or before the ref, and the successor's ref is
that event time (per the compression level's rule). Forward mirrors the
comparison. Hierarchy (spawn / unit-of) edges are containment facts:
always admissible, never timestamp-pruned, never caught by a syscall edge
filter, and the ref passes through unchanged.

Nodes keep the loosest ref seen and are re-expanded when a later path
loosens it; refs take values from the finite timestamp set and only ever
loosen, which bounds the work even on cyclic read/write interactions.

When the store has evicted data (or a date window precedes what is
resident), the whole query is answered from the journal backend, whose
rows are the uncompressed source of truth; results land in the in-memory
session graph either way.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from graalf.dates import date_window
from graalf.model import (
    CompressionLevel,
    EdgeKey,
    EventEdge,
    ForensicGraph,
    ProvNode,
    SignatureKey,
    collapse_timestamps,
    is_hierarchy,
)
from graalf.query.language import (
    ConfigCommand,
    EmptyCriteriaError,
    QueryAst,
    parse_query,
    validate_ast,
)
from graalf.store import GraphStore, NodeCriteria, StoreConfig

INF = math.inf
Ref = float  # int timestamp or +/- inf


def temporal_admit(edge: EventEdge, ref: Ref, direction: str,
                   level: CompressionLevel) -> tuple[bool, Ref]:
    """Admission test and successor reference time for one causal edge.

    Backward at C0/C1 admits when some event time <= ref and tightens the
    ref to the latest such time; C2 only knows the first and last event,
    so it admits when first <= ref and steps to last when last <= ref,
    else conservatively to first; C3 has no usable ordering left and
    always admits with an unconstrained ref. Forward mirrors everything.
    """
    ts = edge.timestamps
    if direction == "back":
        if level in (CompressionLevel.C0, CompressionLevel.C1):
            best: Ref | None = None
            for t in ts:
                if t <= ref and (best is None or t > best):
                    best = t
            return (False, ref) if best is None else (True, best)
        if level is CompressionLevel.C2:
            first, last = ts[0], ts[-1]
            if first > ref:
                return False, ref
            return True, (last if last <= ref else first)
        return True, INF
    # forward
    if level in (CompressionLevel.C0, CompressionLevel.C1):
        best = None
        for t in ts:
            if t >= ref and (best is None or t < best):
                best = t
        return (False, ref) if best is None else (True, best)
    if level is CompressionLevel.C2:
        first, last = ts[0], ts[-1]
        if last < ref:
            return False, ref
        return True, (first if first >= ref else last)
    return True, -INF


def criteria_from_ast(ast: QueryAst) -> NodeCriteria:
    crit = NodeCriteria(kind=ast.node_kind, edge_filter=ast.edge_filter)
    for cond in ast.conditions:
        if cond.field == "name":
            crit.titles.append((cond.op, cond.value))
        elif cond.field == "file_name":
            crit.file_titles.append((cond.op, cond.value))
        elif cond.field == "date":
            crit.dates.append((cond.op, cond.value))
        else:  # pid and any other attribute
            crit.attrs.append((cond.field, cond.op, cond.value))
    return crit


def initial_ref(ast: QueryAst) -> Ref:
    """Traversal seed ref: unbounded, tightened by a date predicate."""
    windows = []
    for cond in ast.conditions:
        if cond.field == "date":
            window = date_window(cond.value)
            if window:
                windows.append(window)
    if ast.direction == "back":
        if windows:
            return min(end for _, end in windows) - 1  # end of the named day
        return INF
    if windows:
        return max(start for start, _ in windows)  # start of the named day
    return -INF


@dataclass
class QueryStats:
    seeds: int = 0
    visited: int = 0
    elapsed_ms: float = 0.0
    backend_calls: int = 0
    warning: str | None = None

    def as_dict(self) -> dict:
        return {
            "seeds": self.seeds,
            "visited": self.visited,
            "elapsed_ms": round(self.elapsed_ms, 3),
            "backend_calls": self.backend_calls,
            "warning": self.warning,
        }


@dataclass
class QueryResult:
    graph: ForensicGraph
    step: int
    stats: QueryStats


class _MemoryView:
    """Traversal view over the resident store."""

    def __init__(self, store: GraphStore):
        self.store = store
        self.backend_calls = 0

    def select(self, criteria: NodeCriteria) -> list[ProvNode]:
        return self.store.select_nodes(criteria)

    def prepare(self, sigs: list[SignatureKey]) -> None:
        pass

    def edges_into(self, sig: SignatureKey) -> list[EventEdge]:
        return self.store.edges_into(sig)

    def edges_out_of(self, sig: SignatureKey) -> list[EventEdge]:
        return self.store.edges_out_of(sig)

    def edges_between(self, sigs: set[SignatureKey],
                      edge_filter: str | None) -> list[EventEdge]:
        return self.store.select_edges(sigs, edge_filter)

    def node(self, sig: SignatureKey) -> ProvNode | None:
        return self.store.get_node(sig)


class _BackendView:
    """Traversal view that reconstructs the graph from journal rows.

    Each prepare() is one batched pass over rows incident to the layer's
    whole frontier; delivered rows are suppressed for the rest of the
    traversal, and the accumulated working graph serves the edge lookups.
    """

    def __init__(self, backend, level: CompressionLevel,
                 direction: str | None = None, edge_filter: str | None = None):
        self.backend = backend
        self.level = level
        self.direction = direction
        self.edge_filter = edge_filter
        self.cursor = backend.cursor()
        self.nodes: dict[SignatureKey, ProvNode] = {}
        self._in: dict[SignatureKey, dict[EdgeKey, EventEdge]] = {}
        self._out: dict[SignatureKey, dict[EdgeKey, EventEdge]] = {}
        self._prepared: set[SignatureKey] = set()
        self.backend_calls = 0

    def select(self, criteria: NodeCriteria) -> list[ProvNode]:
        self.backend_calls += 1
        return self.backend.select(criteria, self.level)

    def prepare(self, sigs: list[SignatureKey]) -> None:
        fresh = [s for s in sigs if s not in self._prepared]
        if not fresh:
            return
        self._prepared.update(fresh)
        self.backend_calls += 1
        for lg in self.backend.expand(fresh, self.cursor,
                                      direction=self.direction,
                                      edge_filter=self.edge_filter):
            self._absorb(lg)

    def _absorb(self, lg) -> None:
        for node in lg.nodes:
            existing = self.nodes.get(node.sig)
            if existing is None:
                self.nodes[node.sig] = ProvNode(node.sig, node.title, dict(node.attrs))
            else:
                if ("synthetic_title" in existing.attrs
                        and "synthetic_title" not in node.attrs and node.title):
                    existing.title = node.title
                    existing.attrs.pop("synthetic_title", None)
                for k, v in node.attrs.items():
                    existing.attrs.setdefault(k, v)
        for edge in lg.edges:
            out_bucket = self._out.setdefault(edge.src, {})
            in_bucket = self._in.setdefault(edge.dst, {})
            existing = out_bucket.get(edge.key())
            if existing is None:
                stored = edge.copy()
                out_bucket[edge.key()] = stored
                in_bucket[edge.key()] = stored
            else:
                existing.timestamps = sorted(existing.timestamps + edge.timestamps)
                existing.count += edge.count

    def _collapsed(self, edge: EventEdge) -> EventEdge:
        ts, count = collapse_timestamps(edge.timestamps, edge.count, self.level)
        return EventEdge(edge.src, edge.dst, edge.rel, ts, count, dict(edge.attrs))

    def edges_into(self, sig: SignatureKey) -> list[EventEdge]:
        return [self._collapsed(e) for e in self._in.get(sig, {}).values()]

    def edges_out_of(self, sig: SignatureKey) -> list[EventEdge]:
        return [self._collapsed(e) for e in self._out.get(sig, {}).values()]

    def edges_between(self, sigs: set[SignatureKey],
                      edge_filter: str | None) -> list[EventEdge]:
        self.prepare(list(sigs))
        out = []
        for src in sigs:
            for edge in self._out.get(src, {}).values():
                if edge.dst not in sigs:
                    continue
                if edge_filter is not None and edge.rel != edge_filter:
                    continue
                out.append(self._collapsed(edge))
        return out

    def node(self, sig: SignatureKey) -> ProvNode | None:
        return self.nodes.get(sig)


@dataclass
class EngineConfig:
    mode: str = "normal"
    depth: int | None = None  # None = unbounded, the default


class QueryEngine:
    """Executes parsed statements against the store and journal backend."""

    def __init__(self, store: GraphStore, backend=None,
                 config: EngineConfig | None = None):
        self.store = store
        self.backend = backend
        self.config = config or EngineConfig()

    # -- configuration ------------------------------------------------------------

    def apply_config(self, cmd: ConfigCommand) -> str:
        if cmd.key == "compression":
            self.store.config.level = CompressionLevel(cmd.value.lower())
            return f"compression set to {cmd.value.lower()}"
        if cmd.key == "mode":
            self.config.mode = cmd.value.lower()
            return f"mode set to {self.config.mode}"
        if cmd.key == "memory_limit":
            self.store.config.memory_limit_bytes = int(cmd.value)
            return f"memory limit set to {cmd.value} bytes"
        if cmd.key == "evict_threshold":
            self.store.config.evict_threshold = float(cmd.value)
            return f"evict threshold set to {cmd.value}"
        if cmd.key == "depth":
            self.config.depth = int(cmd.value)
            return f"traversal depth limited to {cmd.value}"
        raise ValueError(f"unknown config key {cmd.key}")

    # -- entry points ----------------------------------------------------------------

    def run(self, text: str, session=None) -> QueryResult | str:
        """Parse and execute one statement; config commands return a message."""
        parsed = parse_query(text)
        if isinstance(parsed, ConfigCommand):
            return self.apply_config(parsed)
        return self.execute(parsed, session)

    def execute(self, ast: QueryAst, session=None) -> QueryResult:
        validate_ast(ast)
        t0 = time.perf_counter()
        criteria = criteria_from_ast(ast)
        view, warning = self._view_for(ast)

        seeds = view.select(criteria)
        if ast.direction is None:
            graph = self._select_result(view, seeds, ast)
            visited = len(seeds)
        else:
            graph, visited = self._traverse(view, seeds, ast)

        stats = QueryStats(
            seeds=len(seeds), visited=visited,
            elapsed_ms=(time.perf_counter() - t0) * 1e3,
            backend_calls=view.backend_calls, warning=warning)
        if session is not None:
            graph, step = session.record(graph)
        else:
            step = 1
            for sig in graph.nodes:
                graph.step_of[sig] = 1
        return QueryResult(graph=graph, step=step, stats=stats)

    def execute_select(self, ast: QueryAst, session=None) -> QueryResult:
        assert ast.direction is None
        return self.execute(ast, session)

    def execute_back_select(self, ast: QueryAst, session=None) -> QueryResult:
        assert ast.direction == "back"
        return self.execute(ast, session)

    def execute_forward_select(self, ast: QueryAst, session=None) -> QueryResult:
        assert ast.direction == "forward"
        return self.execute(ast, session)

    # -- internals ----------------------------------------------------------------

    def _view_for(self, ast: QueryAst):
        store = self.store
        warning = None
        wants_backend = store.evicted_any or self._date_precedes_resident(ast)
        if self.backend is not None and len(self.backend.rows) > 0:
            if wants_backend or store.node_count == 0:
                self.backend.flush()
                return _BackendView(self.backend, store.config.level,
                                    ast.direction, ast.edge_filter), None
        elif wants_backend:
            warning = ("results may be incomplete: data was evicted and no "
                       "backend is configured")
        return _MemoryView(store), warning

    def _date_precedes_resident(self, ast: QueryAst) -> bool:
        resident_min = self.store.resident_min_ts
        if resident_min is None:
            return False
        for cond in ast.conditions:
            if cond.field == "date":
                window = date_window(cond.value)
                if window and window[0] < resident_min:
                    return True
        return False

    def _select_result(self, view, seeds: list[ProvNode], ast: QueryAst) -> ForensicGraph:
        graph = ForensicGraph()
        for node in seeds:
            graph.add_node(node)
        sigs = {n.sig for n in seeds}
        for edge in view.edges_between(sigs, ast.edge_filter):
            graph.put_edge(edge)
        return graph

    def _traverse(self, view, seeds: list[ProvNode],
                  ast: QueryAst) -> tuple[ForensicGraph, int]:
        direction = ast.direction
        level = self.store.config.level
        edge_filter = ast.edge_filter
        max_depth = self.config.depth if self.config.depth is not None else INF
        backward = direction == "back"
        ref0 = initial_ref(ast)

        graph = ForensicGraph()
        best: dict[SignatureKey, Ref] = {}
        for node in seeds:
            graph.add_node(node)
            best[node.sig] = ref0
        frontier: dict[SignatureKey, Ref] = dict(best)
        depth = 0

        while frontier and depth < max_depth:
            view.prepare(list(frontier))
            nxt: dict[SignatureKey, Ref] = {}
            for sig, ref in frontier.items():
                edges = view.edges_into(sig) if backward else view.edges_out_of(sig)
                for edge in edges:
                    if is_hierarchy(edge.rel):
                        admit, succ_ref = True, ref
                    elif edge_filter is not None and edge.rel != edge_filter:
                        continue
                    else:
                        admit, succ_ref = temporal_admit(edge, ref, direction, level)
                    if not admit:
                        continue
                    other = edge.src if backward else edge.dst
                    graph.put_edge(edge)
                    if other not in graph.nodes:
                        node = view.node(other)
                        graph.add_node(node if node is not None
                                       else ProvNode(other, other.local_id))
                    known = best.get(other)
                    improved = (known is None
                                or (backward and succ_ref > known)
                                or (not backward and succ_ref < known))
                    if improved:
                        best[other] = succ_ref
                        prev = nxt.get(other)
                        if (prev is None
                                or (backward and succ_ref > prev)
                                or (not backward and succ_ref < prev)):
                            nxt[other] = succ_ref
            frontier = nxt
            depth += 1
        return graph, len(best)


def make_engine(level: CompressionLevel = CompressionLevel.C1,
                backend=None) -> QueryEngine:
    """Convenience constructor used by tests and the CLI."""
    return QueryEngine(GraphStore(StoreConfig(level=level)), backend)

"""Continuous monitoring queries.

A monitor re-runs its query on an interval and fingerprints the result
graph (node signatures, edge keys, counts); a notification is emitted
exactly when the fingerprint changes, carrying the graph delta. Change
detection is whole-result fingerprinting, not incremental maintenance.
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time
from dataclasses import dataclass, field

from graalf.model import ForensicGraph
from graalf.query.engine import QueryEngine
from graalf.query.language import QueryAst, parse_query, validate_ast
from graalf.query.render import sig_str

log = logging.getLogger(__name__)

MIN_INTERVAL_MS = 100


def fingerprint(graph: ForensicGraph) -> str:
    """Deterministic digest over node sigs and edge keys with counts."""
    h = hashlib.sha256()
    for sig in sorted(sig_str(s) for s in graph.nodes):
        h.update(sig.encode())
        h.update(b"\0")
    for key in sorted(graph.edges, key=lambda k: (sig_str(k[0]), sig_str(k[1]), k[2])):
        edge = graph.edges[key]
        h.update(f"{sig_str(key[0])}>{sig_str(key[1])}:{key[2]}:{edge.count}".encode())
        h.update(b"\0")
    return h.hexdigest()


@dataclass
class MonitorSpec:
    id: int
    text: str
    ast: QueryAst
    interval_ms: int
    fingerprint: str
    baseline: ForensicGraph
    next_due_ms: float

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "interval_ms": self.interval_ms,
            "fingerprint": self.fingerprint,
            "nodes": len(self.baseline.nodes),
            "edges": len(self.baseline.edges),
        }


@dataclass
class Notification:
    monitor_id: int
    notification_id: int
    ts_ms: float
    added_nodes: list[dict] = field(default_factory=list)
    added_edges: list[dict] = field(default_factory=list)
    removed: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "type": "notification",
            "id": self.notification_id,
            "monitor_id": self.monitor_id,
            "ts_ms": self.ts_ms,
            "added_nodes": self.added_nodes,
            "added_edges": self.added_edges,
            "removed": self.removed,
        }


class MonitorRegistry:
    """Holds the registered monitors and evaluates the due ones."""

    def __init__(self, engine: QueryEngine):
        self.engine = engine
        self._monitors: dict[int, MonitorSpec] = {}
        self._next_id = 1
        self._next_notification = 1
        self._lock = threading.Lock()

    def register(self, text: str, interval_ms: int = 1000,
                 now_ms: float | None = None) -> MonitorSpec:
        """Parse, validate, and baseline a new monitor query."""
        if interval_ms < MIN_INTERVAL_MS:
            raise ValueError(f"interval must be >= {MIN_INTERVAL_MS} ms")
        ast = parse_query(text)
        if not isinstance(ast, QueryAst):
            raise ValueError("config commands cannot be monitored")
        validate_ast(ast)
        now_ms = time.time() * 1000 if now_ms is None else now_ms
        result = self.engine.execute(ast)
        with self._lock:
            spec = MonitorSpec(
                id=self._next_id, text=text, ast=ast, interval_ms=interval_ms,
                fingerprint=fingerprint(result.graph), baseline=result.graph,
                next_due_ms=now_ms + interval_ms)
            self._next_id += 1
            self._monitors[spec.id] = spec
        return spec

    def remove(self, monitor_id: int) -> bool:
        with self._lock:
            return self._monitors.pop(monitor_id, None) is not None

    def list(self) -> list[MonitorSpec]:
        with self._lock:
            return list(self._monitors.values())

    def poll(self, now_ms: float | None = None) -> list[Notification]:
        """Evaluate every due monitor; emit deltas for changed results.

        A failing monitor is logged and rescheduled; others are unaffected.
        """
        now_ms = time.time() * 1000 if now_ms is None else now_ms
        with self._lock:
            due = [m for m in self._monitors.values() if now_ms >= m.next_due_ms]
        notifications = []
        for spec in due:
            try:
                note = self._evaluate(spec, now_ms)
            except Exception:
                log.exception("monitor %d query failed", spec.id)
                spec.next_due_ms = now_ms + spec.interval_ms
                continue
            if note is not None:
                notifications.append(note)
        return notifications

    def _evaluate(self, spec: MonitorSpec, now_ms: float) -> Notification | None:
        result = self.engine.execute(spec.ast)
        spec.next_due_ms = now_ms + spec.interval_ms
        new_fp = fingerprint(result.graph)
        if new_fp == spec.fingerprint:
            return None
        note = self._diff(spec, result.graph, now_ms)
        spec.fingerprint = new_fp
        spec.baseline = result.graph
        return note

    def _diff(self, spec: MonitorSpec, graph: ForensicGraph,
              now_ms: float) -> Notification:
        old, new = spec.baseline, graph
        with self._lock:
            note = Notification(monitor_id=spec.id,
                                notification_id=self._next_notification,
                                ts_ms=now_ms)
            self._next_notification += 1
        for sig in new.nodes.keys() - old.nodes.keys():
            note.added_nodes.append({"sig": sig_str(sig),
                                     "title": new.nodes[sig].title})
        for sig in old.nodes.keys() - new.nodes.keys():
            note.removed.append({"sig": sig_str(sig),
                                 "title": old.nodes[sig].title})
        for key, edge in new.edges.items():
            before = old.edges.get(key)
            if before is None or before.count != edge.count:
                note.added_edges.append({
                    "src": sig_str(key[0]), "dst": sig_str(key[1]),
                    "rel": key[2], "count": edge.count,
                })
        return note

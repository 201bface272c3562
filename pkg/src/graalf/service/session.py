"""Investigation sessions.

A session numbers the queries an analyst runs (steps 1..k) and keeps the
cumulative merged graph; a node's step is the query that first discovered
it, which drives the step coloring of results. Sessions are in-memory
and expire after an idle period.
"""

from __future__ import annotations

import threading
import time
import uuid

from graalf.model import ForensicGraph

DEFAULT_IDLE_EXPIRY_S = 3600.0


class Session:
    def __init__(self, session_id: str | None = None):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.graph = ForensicGraph()
        self.step = 0
        self.created = time.time()
        self.last_used = self.created
        self._lock = threading.Lock()

    def record(self, result: ForensicGraph) -> tuple[ForensicGraph, int]:
        """Fold a query result into the session; returns the step-annotated
        result graph and its step number. Nodes already known keep the step
        that introduced them."""
        with self._lock:
            self.step += 1
            self.last_used = time.time()
            annotated = ForensicGraph()
            for sig, node in result.nodes.items():
                step = self.graph.step_of.get(sig, self.step)
                annotated.add_node(node, step)
            for edge in result.edges.values():
                annotated.put_edge(edge)
            for sig, node in annotated.nodes.items():
                self.graph.add_node(node, annotated.step_of[sig])
            for edge in annotated.edges.values():
                # Same-key edges across steps describe the same stored
                # events; replace instead of double-counting.
                self.graph.put_edge(edge)
            return annotated, self.step


class SessionManager:
    def __init__(self, idle_expiry_s: float = DEFAULT_IDLE_EXPIRY_S):
        self.idle_expiry_s = idle_expiry_s
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self) -> Session:
        session = Session()
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            return self._sessions.get(session_id)

    def sweep(self, now: float | None = None) -> int:
        """Drop sessions idle past expiry; returns how many were removed."""
        now = time.time() if now is None else now
        with self._lock:
            stale = [sid for sid, s in self._sessions.items()
                     if now - s.last_used > self.idle_expiry_s]
            for sid in stale:
                del self._sessions[sid]
        return len(stale)

    def __len__(self) -> int:
        return len(self._sessions)

"""HTTP API serving the analyst console UI.

Endpoints:
  POST /api/sessions                  -> {"session_id"}
  POST /api/sessions/{id}/query      {"text"} -> query result JSON
  GET  /api/sessions/{id}/graph       -> cumulative merged graph
  POST /api/monitors                 {"text", "interval_ms"}
  GET  /api/monitors
  DELETE /api/monitors/{id}
  GET  /api/events                    -> server-sent event stream
  GET  /api/export/{session}?format=dot|json

Parse and criteria errors surface as 400 with the parser's message;
unknown sessions are 404. Bodies are UTF-8 JSON.
"""

from __future__ import annotations

import json
import queue
import threading
import time

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from graalf.query.engine import QueryEngine
from graalf.query.language import EmptyCriteriaError, QuerySyntaxError
from graalf.query.render import graph_to_json, to_dot
from graalf.service.events import EventBus
from graalf.service.monitor import MonitorRegistry
from graalf.service.session import SessionManager

HEARTBEAT_S = 1.0


class QueryBody(BaseModel):
    text: str


class MonitorBody(BaseModel):
    text: str
    interval_ms: int = 1000


class ServiceState:
    """Everything one server process shares across requests."""

    def __init__(self, engine: QueryEngine, stats_provider=None):
        self.engine = engine
        self.sessions = SessionManager()
        self.monitors = MonitorRegistry(engine)
        self.bus = EventBus()
        self.stats_provider = stats_provider or (lambda: {})
        self._stop = threading.Event()
        self._scheduler: threading.Thread | None = None

    def start_scheduler(self, tick_s: float = 0.1) -> None:
        if self._scheduler is not None:
            return

        def loop() -> None:
            last_heartbeat = 0.0
            while not self._stop.is_set():
                for note in self.monitors.poll():
                    self.bus.publish(note.as_dict())
                now = time.time()
                if now - last_heartbeat >= HEARTBEAT_S:
                    last_heartbeat = now
                    self.bus.publish({"type": "stats", "ts": now,
                                      "ingest": self.stats_provider(),
                                      "store": self.store_stats()})
                self.sessions.sweep()
                self._stop.wait(tick_s)

        self._scheduler = threading.Thread(target=loop, name="monitor-scheduler",
                                           daemon=True)
        self._scheduler.start()

    def stop_scheduler(self) -> None:
        self._stop.set()
        if self._scheduler is not None:
            self._scheduler.join(timeout=2)
            self._scheduler = None

    def store_stats(self) -> dict:
        store = self.engine.store
        return {
            "nodes": store.node_count,
            "edges": store.edge_count,
            "usage_bytes": store.usage_bytes,
            "pending": store.pending,
            "evicted_any": store.evicted_any,
        }

    def _stats_frame(self) -> dict:
        return {"type": "stats", "ts": time.time(),
                "ingest": self.stats_provider(), "store": self.store_stats()}

    def event_frames(self, poll_timeout_s: float = HEARTBEAT_S,
                     max_idle_s: float = 3600.0):
        """SSE frame generator: an immediate stats frame, then bus events,
        with keep-alive comments while idle."""
        q = self.bus.subscribe()
        try:
            yield _sse(self._stats_frame())
            idle_since = time.time()
            while True:
                try:
                    event = q.get(timeout=poll_timeout_s)
                    yield _sse(event)
                    idle_since = time.time()
                except queue.Empty:
                    # keep-alive comment frame so proxies do not cut us off
                    yield ": keep-alive\n\n"
                    if time.time() - idle_since > max_idle_s:
                        return
        finally:
            self.bus.unsubscribe(q)


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="graalf", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.post("/api/sessions")
    def create_session() -> dict:
        session = state.sessions.create()
        return {"session_id": session.id}

    def _session(session_id: str):
        session = state.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/api/sessions/{session_id}/query")
    def run_query(session_id: str, body: QueryBody) -> dict:
        session = _session(session_id)
        try:
            outcome = state.engine.run(body.text, session)
        except (QuerySyntaxError, EmptyCriteriaError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if isinstance(outcome, str):
            return {"config": outcome}
        return {
            "step": outcome.step,
            "stats": outcome.stats.as_dict(),
            "graph": graph_to_json(outcome.graph),
        }

    @app.get("/api/sessions/{session_id}/graph")
    def session_graph(session_id: str) -> dict:
        session = _session(session_id)
        return {"step": session.step, "graph": graph_to_json(session.graph)}

    @app.post("/api/monitors")
    def add_monitor(body: MonitorBody) -> dict:
        try:
            spec = state.monitors.register(body.text, body.interval_ms)
        except (QuerySyntaxError, EmptyCriteriaError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return spec.as_dict()

    @app.get("/api/monitors")
    def list_monitors() -> list[dict]:
        return [m.as_dict() for m in state.monitors.list()]

    @app.delete("/api/monitors/{monitor_id}")
    def remove_monitor(monitor_id: int) -> dict:
        if not state.monitors.remove(monitor_id):
            raise HTTPException(status_code=404, detail="unknown monitor")
        return {"removed": monitor_id}

    @app.get("/api/events")
    def events() -> StreamingResponse:
        return StreamingResponse(state.event_frames(),
                                 media_type="text/event-stream")

    @app.get("/api/export/{session_id}")
    def export_session(session_id: str, format: str = "json"):
        session = _session(session_id)
        if format == "dot":
            return PlainTextResponse(
                to_dot(session.graph, mode=state.engine.config.mode),
                media_type="text/vnd.graphviz")
        if format == "json":
            return {"step": session.step, "graph": graph_to_json(session.graph)}
        raise HTTPException(status_code=400, detail=f"unknown format {format!r}")

    return app


def _sse(event: dict) -> str:
    kind = event.get("type", "message")
    return f"event: {kind}\ndata: {json.dumps(event)}\n\n"

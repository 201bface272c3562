"""Command-line entry point.

Subcommands: ingest, query (one-shot, prints JSON), console, serve,
monitor add/list, export --two-table, import. The --store root holds the
flat journal; without it the process runs memory-only.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from graalf.backend import JournalBackend, import_two_table, snapshot_two_table
from graalf.ingest.records import CsvHeaderSpec, HostState
from graalf.ingest.stream import FORMATS, ingest_stream
from graalf.model import CompressionLevel
from graalf.query.engine import EngineConfig, QueryEngine
from graalf.query.render import graph_to_json
from graalf.service.console import Console
from graalf.store import GraphStore, StoreConfig


def build_parser() -> argparse.ArgumentParser:
    import os

    parser = argparse.ArgumentParser(
        prog="graalf",
        description="provenance-graph forensics: ingest system-call logs, "
                    "query causal history")
    # flags win; GRAALF_* environment variables supply defaults
    parser.add_argument("--store", metavar="DIR",
                        default=os.environ.get("GRAALF_STORE"),
                        help="store root directory (holds the flat journal)")
    parser.add_argument("--compress", choices=["c0", "c1", "c2", "c3"],
                        default=os.environ.get("GRAALF_COMPRESS", "c1"),
                        help="edge compression level")
    parser.add_argument("--memory-limit", type=int, metavar="BYTES",
                        default=(int(os.environ["GRAALF_MEMORY_LIMIT"])
                                 if "GRAALF_MEMORY_LIMIT" in os.environ else None),
                        help="in-memory store budget; evicts when exceeded")
    parser.add_argument("--evict-threshold", type=float, metavar="FRACTION",
                        default=float(os.environ.get("GRAALF_EVICT_THRESHOLD",
                                                     "0.9")),
                        help="eviction watermark (default 0.9)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a log stream into the store")
    p.add_argument("--format", required=True, dest="fmt", choices=FORMATS)
    p.add_argument("--host", required=True, help="originating host id")
    p.add_argument("--follow", action="store_true",
                   help="keep reading as the file grows")
    p.add_argument("--header", help="CSV column spec (comma-separated); "
                                    "defaults to the file's first line")
    p.add_argument("--sysdig-fields",
                   help="sysdig plain-text field order (comma-separated)")
    p.add_argument("source", help="log file path, or - for stdin")

    p = sub.add_parser("query", help="run one statement and print JSON")
    p.add_argument("text", help='e.g. "back select * from soc where name has 1.2.3.4:80"')
    p.add_argument("--mode", choices=["normal", "verbose"], default="normal")

    p = sub.add_parser("console", help="interactive query console")
    p.add_argument("--preload", action="store_true",
                   help="replay the journal into memory first")

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--preload", action="store_true")
    p.add_argument("--ingest", metavar="FILE", help="also ingest this file")
    p.add_argument("--format", dest="fmt", choices=FORMATS)
    p.add_argument("--host", help="host id for --ingest")
    p.add_argument("--follow", action="store_true")

    p = sub.add_parser("monitor", help="manage monitors on a running server")
    msub = p.add_subparsers(dest="monitor_command", required=True)
    m = msub.add_parser("add")
    m.add_argument("text")
    m.add_argument("--interval", default="1s", help="e.g. 500ms, 1s, 2m")
    m.add_argument("--url", default="http://127.0.0.1:8787")
    m = msub.add_parser("list")
    m.add_argument("--url", default="http://127.0.0.1:8787")

    p = sub.add_parser("export", help="write a two-table snapshot")
    p.add_argument("--two-table", required=True, metavar="DIR", dest="two_table")

    p = sub.add_parser("import", help="load a two-table snapshot into the store")
    p.add_argument("snapshot_dir")
    return parser


def parse_interval_ms(text: str) -> int:
    text = text.strip().lower()
    try:
        if text.endswith("ms"):
            return int(float(text[:-2]))
        if text.endswith("s"):
            return int(float(text[:-1]) * 1000)
        if text.endswith("m"):
            return int(float(text[:-1]) * 60_000)
        return int(text)
    except ValueError:
        raise SystemExit(f"bad interval {text!r} (use e.g. 500ms, 1s, 2m)")


def build_runtime(args) -> tuple[GraphStore, JournalBackend | None, QueryEngine]:
    store = GraphStore(StoreConfig(
        level=CompressionLevel(args.compress),
        memory_limit_bytes=args.memory_limit,
        evict_threshold=args.evict_threshold))
    backend = JournalBackend(args.store) if args.store else None
    engine = QueryEngine(store, backend, EngineConfig())
    return store, backend, engine


def preload_journal(store: GraphStore, backend: JournalBackend) -> int:
    """Replay journal rows into the in-memory store (same path as live)."""
    from graalf.ingest.linegraph import build_line_graph

    states: dict[str, HostState] = {}
    for row in backend.rows:
        rec = row.to_record()
        if rec.pid is None and rec.resource is None:
            continue
        state = states.setdefault(rec.host, HostState(rec.host))
        store.insert_line_graph(build_line_graph(rec, state))
    return len(backend.rows)


def _open_lines(source: str, follow: bool):
    if source == "-":
        yield from sys.stdin
        return
    with open(source, "r", encoding="utf-8", errors="replace") as fh:
        while True:
            line = fh.readline()
            if line:
                yield line
            elif follow:
                time.sleep(0.2)
            else:
                return


def cmd_ingest(args) -> int:
    store, backend, _ = build_runtime(args)
    state = HostState(args.host)
    spec = CsvHeaderSpec(args.header.split(",")) if args.header else None
    fields = args.sysdig_fields.split(",") if args.sysdig_fields else None
    stats = ingest_stream(_open_lines(args.source, args.follow), args.fmt,
                          state, store, backend=backend,
                          csv_spec=spec, sysdig_fields=fields)
    if backend is not None:
        backend.flush()
        backend.close()
    print(json.dumps(stats.as_dict()))
    return 0


def cmd_query(args) -> int:
    store, backend, engine = build_runtime(args)
    engine.config.mode = args.mode
    if backend is None:
        print("error: query needs --store (no data without a journal)",
              file=sys.stderr)
        return 2
    try:
        outcome = engine.run(args.text)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if isinstance(outcome, str):
        print(json.dumps({"config": outcome}))
        return 0
    print(json.dumps({
        "step": outcome.step,
        "stats": outcome.stats.as_dict(),
        "graph": graph_to_json(outcome.graph),
    }, indent=2))
    return 0


def cmd_console(args) -> int:
    store, backend, engine = build_runtime(args)
    if args.preload and backend is not None:
        n = preload_journal(store, backend)
        print(f"preloaded {n} journal rows "
              f"({store.node_count} nodes, {store.edge_count} edges)")
    Console(engine).run()
    return 0


def cmd_serve(args) -> int:
    import threading

    import uvicorn

    from graalf.service.api import ServiceState, create_app

    store, backend, engine = build_runtime(args)
    if args.preload and backend is not None:
        preload_journal(store, backend)

    ingest_stats = {}

    def stats_provider() -> dict:
        return dict(ingest_stats)

    state = ServiceState(engine, stats_provider)
    if args.ingest:
        if not args.fmt or not args.host:
            print("error: --ingest needs --format and --host", file=sys.stderr)
            return 2

        def ingest_loop() -> None:
            host_state = HostState(args.host)
            stats = ingest_stream(
                _open_lines(args.ingest, args.follow), args.fmt,
                host_state, store, backend=backend)
            ingest_stats.update(stats.as_dict())

        threading.Thread(target=ingest_loop, name="ingest", daemon=True).start()

    state.start_scheduler()
    app = create_app(state)
    try:
        uvicorn.run(app, host=args.bind, port=args.port, log_level="warning")
    finally:
        state.stop_scheduler()
        if backend is not None:
            backend.flush()
    return 0


def cmd_monitor(args) -> int:
    import requests

    if args.monitor_command == "add":
        resp = requests.post(f"{args.url}/api/monitors", json={
            "text": args.text,
            "interval_ms": parse_interval_ms(args.interval),
        }, timeout=10)
    else:
        resp = requests.get(f"{args.url}/api/monitors", timeout=10)
    print(json.dumps(resp.json(), indent=2))
    return 0 if resp.ok else 1


def cmd_export(args) -> int:
    store, backend, _ = build_runtime(args)
    if backend is None:
        print("error: export needs --store", file=sys.stderr)
        return 2
    preload_journal(store, backend)
    report = snapshot_two_table(store, args.two_table)
    print(json.dumps({"vertices": report.vertices, "edges": report.edges}))
    return 0


def cmd_import(args) -> int:
    store, backend, _ = build_runtime(args)
    report = import_two_table(store, args.snapshot_dir)
    print(json.dumps({"vertices": report.vertices, "edges": report.edges,
                      "nodes_resident": store.node_count}))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "ingest": cmd_ingest,
        "query": cmd_query,
        "console": cmd_console,
        "serve": cmd_serve,
        "monitor": cmd_monitor,
        "export": cmd_export,
        "import": cmd_import,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())

"""Interactive console.

Reads statements, prints tabular node/edge summaries with counts and
elapsed time, applies config commands live, and writes DOT/JSON exports.
Interactively, a query runs on a worker thread so the prompt stays
responsive and the result is announced when ready; under a piped script
each statement completes before the next, keeping replays deterministic.
"""

from __future__ import annotations

import shlex
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from graalf.query.engine import QueryEngine, QueryResult
from graalf.query.language import EmptyCriteriaError, QuerySyntaxError
from graalf.query.render import export_graph
from graalf.service.session import Session

PROMPT = "graalf> "
MAX_TABLE_ROWS = 20


class Console:
    def __init__(self, engine: QueryEngine, session: Session | None = None,
                 out=None):
        self.engine = engine
        self.session = session or Session()
        self.out = out or sys.stdout
        self.last_result: QueryResult | None = None
        self._pool = ThreadPoolExecutor(max_workers=2,
                                        thread_name_prefix="console-query")

    def _print(self, text: str = "") -> None:
        self.out.write(text + "\n")

    def run(self, lines=None, interactive: bool | None = None) -> None:
        """Main loop; ``lines`` (or stdin) supplies statements."""
        source = lines if lines is not None else sys.stdin
        if interactive is None:
            interactive = lines is None and sys.stdin.isatty()
        try:
            if interactive:
                self._run_interactive()
            else:
                for line in source:
                    self.handle(line)
        except (EOFError, KeyboardInterrupt):
            pass
        finally:
            self.shutdown()

    def _run_interactive(self) -> None:
        while True:
            try:
                line = input(PROMPT)
            except EOFError:
                break
            statement = line.strip()
            if not statement:
                continue
            if statement in ("exit", "quit"):
                break
            future = self._pool.submit(self._execute, statement)
            future.add_done_callback(lambda f: None)

    def _execute(self, statement: str) -> None:
        try:
            self.handle(statement)
        except Exception as exc:  # never kill the loop
            self._print(f"error: {exc}")

    def handle(self, line: str) -> None:
        """Process one console statement."""
        statement = line.strip()
        if not statement or statement.startswith("#"):
            return
        if statement in ("exit", "quit"):
            raise EOFError
        if statement.startswith("export"):
            self._export(statement)
            return
        try:
            outcome = self.engine.run(statement, self.session)
        except (QuerySyntaxError, EmptyCriteriaError) as exc:
            self._print(f"error: {exc}")
            return
        except ValueError as exc:
            self._print(f"error: {exc}")
            return
        if isinstance(outcome, str):
            self._print(outcome)
            return
        self.last_result = outcome
        self._print_result(outcome)

    def _export(self, statement: str) -> None:
        try:
            parts = shlex.split(statement)
        except ValueError as exc:
            self._print(f"error: {exc}")
            return
        if len(parts) != 3 or parts[1] not in ("dot", "json"):
            self._print("usage: export dot|json <path>")
            return
        graph = (self.last_result.graph if self.last_result is not None
                 else self.session.graph)
        try:
            export_graph(graph, parts[1], parts[2], self.engine.config.mode)
        except OSError as exc:
            self._print(f"error: {exc}")
            return
        self._print(f"wrote {parts[1]} to {parts[2]}")

    def _print_result(self, result: QueryResult) -> None:
        graph = result.graph
        stats = result.stats
        self._print(f"step {result.step}: {len(graph.nodes)} nodes, "
                    f"{len(graph.edges)} edges "
                    f"({stats.seeds} seeds, {stats.visited} visited, "
                    f"{stats.elapsed_ms:.1f} ms"
                    + (", via backend" if stats.backend_calls else "") + ")")
        if stats.warning:
            self._print(f"warning: {stats.warning}")
        rows = sorted(
            ((sig.kind.value, node.title, graph.step_of.get(sig, 0))
             for sig, node in graph.nodes.items()),
            key=lambda r: (r[2], r[0], r[1]))
        if not rows:
            return
        width = max(len(r[0]) for r in rows)
        for kind, title, step in rows[:MAX_TABLE_ROWS]:
            self._print(f"  [{step}] {kind.ljust(width)}  {title}")
        if len(rows) > MAX_TABLE_ROWS:
            self._print(f"  ... {len(rows) - MAX_TABLE_ROWS} more")
        if graph.edges:
            by_rel: dict[str, int] = {}
            for edge in graph.edges.values():
                by_rel[edge.rel] = by_rel.get(edge.rel, 0) + edge.count
            summary = ", ".join(f"{rel}×{n}" for rel, n in sorted(by_rel.items()))
            self._print(f"  edges: {summary}")

    def shutdown(self) -> None:
        """Flush pending work to the backend and stop workers."""
        self._pool.shutdown(wait=True)
        self.engine.store.drain()
        if self.engine.backend is not None:
            self.engine.backend.flush()

"""Streaming driver: lines in, line graphs into the store, stats out.

Per-record failures are counted, never fatal; only an unreadable source
aborts the stream. One driver instance serves one host's stream, so the
host state needs no locking.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from graalf.ingest.audit import AuditParser
from graalf.ingest.csvlog import CsvParser
from graalf.ingest.linegraph import EmptyRecord, build_line_graph
from graalf.ingest.records import (
    CsvHeaderSpec,
    EventRecord,
    HostState,
    Skip,
    StateOnly,
)
from graalf.ingest.sysdig import SysdigParser
from graalf.model import KNOWN_SYSCALLS

log = logging.getLogger(__name__)

FORMATS = ("audit", "sysdig-json", "sysdig-plain", "csv")


@dataclass
class IngestStats:
    parsed: int = 0
    state_only: int = 0
    skipped: int = 0
    unknown_syscalls: int = 0
    emitted_nodes: int = 0
    emitted_edges: int = 0
    latency_us: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "parsed": self.parsed,
            "state_only": self.state_only,
            "skipped": self.skipped,
            "unknown_syscalls": self.unknown_syscalls,
            "emitted_nodes": self.emitted_nodes,
            "emitted_edges": self.emitted_edges,
            "latency_samples": len(self.latency_us),
        }


def iter_records(lines: Iterable[str], fmt: str, state: HostState,
                 stats: IngestStats, csv_spec: CsvHeaderSpec | None = None,
                 sysdig_fields: list[str] | None = None) -> Iterator[EventRecord]:
    """Parse a raw line stream into event records, updating stats."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown ingest format {fmt!r}")

    if fmt == "audit":
        parser = AuditParser(state)
        for line in lines:
            for outcome in parser.feed(line):
                rec = _classify(outcome, stats)
                if rec is not None:
                    yield rec
        for outcome in parser.finish():
            rec = _classify(outcome, stats)
            if rec is not None:
                yield rec
        return

    if fmt == "csv":
        line_iter = iter(lines)
        if csv_spec is None:
            for first in line_iter:
                if first.strip():
                    csv_spec = CsvHeaderSpec(first.strip().split(","))
                    break
            if csv_spec is None:
                return
        csv_parser = CsvParser(state.host, csv_spec)
        for line in line_iter:
            rec = _classify(csv_parser.parse(line), stats)
            if rec is not None:
                yield rec
        return

    sysdig = SysdigParser(state.host, sysdig_fields)
    parse = sysdig.parse_json if fmt == "sysdig-json" else sysdig.parse_plain
    for line in lines:
        if not line.strip():
            continue
        rec = _classify(parse(line), stats)
        if rec is not None:
            yield rec


def _classify(outcome, stats: IngestStats) -> EventRecord | None:
    if isinstance(outcome, EventRecord):
        return outcome
    if isinstance(outcome, StateOnly):
        stats.state_only += 1
    elif isinstance(outcome, Skip):
        stats.skipped += 1
    return None


def ingest_stream(lines: Iterable[str], fmt: str, state: HostState, store,
                  backend=None, csv_spec: CsvHeaderSpec | None = None,
                  sysdig_fields: list[str] | None = None,
                  sample_every: int = 1000) -> IngestStats:
    """Run the full parse -> line graph -> insert pipeline over a stream.

    ``store`` takes line graphs (``insert_line_graph``); ``backend``, when
    given, receives every causal record first (``append_record``) so the
    flat journal stays the source of truth.
    """
    stats = IngestStats()
    n = 0
    for rec in iter_records(lines, fmt, state, stats, csv_spec, sysdig_fields):
        t0 = time.perf_counter() if n % sample_every == 0 else 0.0
        try:
            if backend is not None:
                backend.append_record(rec)
            lg = build_line_graph(rec, state)
        except EmptyRecord:
            stats.skipped += 1
            continue
        except Exception:
            stats.skipped += 1
            log.exception("record failed to convert")
            continue
        receipt = store.insert_line_graph(lg)
        stats.parsed += 1
        if rec.syscall not in KNOWN_SYSCALLS:
            stats.unknown_syscalls += 1
        stats.emitted_nodes += receipt.new_nodes
        stats.emitted_edges += receipt.new_edges
        if t0:
            stats.latency_us.append((time.perf_counter() - t0) * 1e6)
        n += 1
    return stats

from graalf.ingest.records import (
    CsvHeaderSpec,
    EventRecord,
    HostState,
    ResourceRef,
    Skip,
    StateOnly,
)
from graalf.ingest.audit import AuditParser, parse_audit_line
from graalf.ingest.csvlog import CsvParser, parse_csv_record
from graalf.ingest.sysdig import SysdigParser, parse_sysdig_line
from graalf.ingest.linegraph import EmptyRecord, build_line_graph
from graalf.ingest.stream import IngestStats, ingest_stream

__all__ = [
    "AuditParser",
    "CsvHeaderSpec",
    "CsvParser",
    "EmptyRecord",
    "EventRecord",
    "HostState",
    "IngestStats",
    "ResourceRef",
    "Skip",
    "StateOnly",
    "SysdigParser",
    "build_line_graph",
    "ingest_stream",
    "parse_audit_line",
    "parse_csv_record",
    "parse_sysdig_line",
]

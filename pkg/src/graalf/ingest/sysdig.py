"""Sysdig log handler (json and plain-text output formats).

Sysdig already resolves file and network names next to the descriptor
number, so no fd table is needed; records map straight onto EventRecord.
Plain-text capture order is not self-describing, so the field order used
at capture time must be supplied as configuration.
"""

from __future__ import annotations

import json
import logging

from graalf.ingest.records import (
    EventRecord,
    MalformedRecord,
    Skip,
    canonical_field,
    record_from_fields,
)
from graalf.model import HostId

log = logging.getLogger(__name__)

DEFAULT_PLAIN_FIELDS = ["ts", "syscall", "pid", "pname", "ppid", "ppname", "fd_name"]


class SysdigParser:
    """Parses one capture's records; ``fields`` configures plain-text order."""

    def __init__(self, host: HostId, fields: list[str] | None = None):
        self.host = host
        self.fields = [canonical_field(f) for f in (fields or DEFAULT_PLAIN_FIELDS)]
        self.skipped = 0

    def parse_json(self, line: str) -> EventRecord | Skip:
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise MalformedRecord("json record is not an object")
            fields = {}
            for key, value in obj.items():
                try:
                    fields[canonical_field(key)] = "" if value is None else str(value)
                except MalformedRecord:
                    continue  # tolerate extra capture fields
            return record_from_fields(self.host, fields)
        except (json.JSONDecodeError, MalformedRecord) as exc:
            self.skipped += 1
            log.warning("skipping sysdig json record: %s", exc)
            return Skip(str(exc))

    def parse_plain(self, line: str) -> EventRecord | Skip:
        line = line.rstrip("\n")
        if not line.strip():
            return Skip("blank line")
        parts = line.split(None, len(self.fields) - 1)
        try:
            if len(parts) < len(self.fields):
                # trailing optional fields may be empty at capture
                parts += [""] * (len(self.fields) - len(parts))
            return record_from_fields(self.host, dict(zip(self.fields, parts)))
        except MalformedRecord as exc:
            self.skipped += 1
            log.warning("skipping sysdig plain record: %s", exc)
            return Skip(str(exc))


def parse_sysdig_line(line: str, fmt: str, parser: SysdigParser) -> EventRecord | Skip:
    """Parse one sysdig record; ``fmt`` is "json" or "plain"."""
    if fmt == "json":
        return parser.parse_json(line)
    return parser.parse_plain(line)

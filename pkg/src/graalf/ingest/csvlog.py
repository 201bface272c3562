"""Generic CSV log handler.

The column layout comes from a :class:`CsvHeaderSpec` -- either the CSV's
own first line or an external header. Cells follow RFC-4180 quoting, so a
quoted path may contain commas.
"""

from __future__ import annotations

import csv
import io
import logging

from graalf.ingest.records import (
    CsvHeaderSpec,
    EventRecord,
    MalformedRecord,
    Skip,
    record_from_fields,
)
from graalf.model import HostId

log = logging.getLogger(__name__)


class ColumnCountMismatch(ValueError):
    pass


def parse_csv_record(spec: CsvHeaderSpec, line: str, host: HostId = "") -> EventRecord:
    """Parse one CSV line positionally against the header spec.

    Raises ColumnCountMismatch when the cell count differs from the
    header, MalformedRecord on unparseable typed fields.
    """
    cells = next(csv.reader(io.StringIO(line)))
    if len(cells) != len(spec.columns):
        raise ColumnCountMismatch(
            f"expected {len(spec.columns)} cells, got {len(cells)}")
    return record_from_fields(host, dict(zip(spec.columns, cells)))


class CsvParser:
    """Streaming wrapper that counts and logs per-line failures."""

    def __init__(self, host: HostId, spec: CsvHeaderSpec):
        self.host = host
        self.spec = spec
        self.skipped = 0

    def parse(self, line: str) -> EventRecord | Skip:
        if not line.strip():
            return Skip("blank line")
        try:
            return parse_csv_record(self.spec, line, self.host)
        except (ColumnCountMismatch, MalformedRecord) as exc:
            self.skipped += 1
            log.warning("skipping csv record: %s", exc)
            return Skip(str(exc))

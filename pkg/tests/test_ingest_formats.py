import json

import pytest

from graalf.ingest.csvlog import ColumnCountMismatch, parse_csv_record
from graalf.ingest.linegraph import build_line_graph
from graalf.ingest.records import (
    CsvHeaderSpec,
    EventRecord,
    HostState,
    MalformedRecord,
    Skip,
    parse_timestamp,
)
from graalf.ingest.sysdig import SysdigParser, parse_sysdig_line
from graalf.model import NodeKind


class TestSysdigJson:
    def test_socket_resource_inferred_from_endpoint(self):
        parser = SysdigParser("h1")
        rec = parser.parse_json(json.dumps({
            "ts": 1000, "syscall": "write", "pid": 4667, "comm": "scp",
            "ppid": 4600, "fd_name": "128.55.12.1:22"}))
        assert isinstance(rec, EventRecord)
        assert rec.resource.kind is NodeKind.SOCKET
        assert rec.ppid == 4600
        assert rec.comm == "scp"

    def test_sysdig_native_field_names_accepted(self):
        parser = SysdigParser("h1")
        rec = parser.parse_json(json.dumps({
            "evt.time": 1000, "evt.type": "read", "proc.pid": 7,
            "proc.name": "cat", "fd.name": "/etc/hosts", "fd.type": "file"}))
        assert rec.syscall == "read"
        assert rec.resource.kind is NodeKind.FILE

    def test_missing_ts_skips(self):
        parser = SysdigParser("h1")
        out = parser.parse_json(json.dumps({"syscall": "read", "pid": 1}))
        assert isinstance(out, Skip)
        assert parser.skipped == 1

    def test_garbage_json_skips(self):
        parser = SysdigParser("h1")
        assert isinstance(parser.parse_json("{nope"), Skip)
        assert isinstance(parser.parse_json("[1,2]"), Skip)


class TestSysdigPlain:
    def test_plain_equals_json_twin(self):
        fields = ["ts", "syscall", "pid", "pname", "fd_name"]
        parser = SysdigParser("h1", fields)
        plain = parser.parse_plain("1000 write 4667 scp 128.55.12.1:22")
        as_json = parser.parse_json(json.dumps({
            "ts": 1000, "syscall": "write", "pid": 4667, "pname": "scp",
            "fd_name": "128.55.12.1:22"}))
        assert plain == as_json

    def test_last_field_absorbs_spaces(self):
        parser = SysdigParser("h1", ["ts", "syscall", "pid", "fd_name"])
        rec = parser.parse_plain("5 read 9 /tmp/with space.txt")
        assert rec.resource.path_or_endpoint == "/tmp/with space.txt"

    def test_dispatch_helper(self):
        parser = SysdigParser("h1", ["ts", "syscall", "pid", "fd_name"])
        rec = parse_sysdig_line("7 read 9 /x", "plain", parser)
        assert rec.ts == 7
        rec = parse_sysdig_line(json.dumps(
            {"ts": 7, "syscall": "read", "pid": 9, "fd_name": "/x"}),
            "json", parser)
        assert rec.ts == 7


class TestCsv:
    SPEC = CsvHeaderSpec(["ts", "syscall", "pid", "pname", "ppid",
                          "ppname", "path"])

    def test_positional_mapping(self):
        rec = parse_csv_record(self.SPEC, "100,read,10,bash,1,init,/etc/hosts",
                               host="h1")
        assert rec.ts == 100
        assert rec.syscall == "read"
        assert rec.pid == 10
        assert rec.comm == "bash"
        assert rec.ppid == 1
        assert rec.ppname == "init"
        assert rec.resource.kind is NodeKind.FILE
        assert rec.resource.path_or_endpoint == "/etc/hosts"

    def test_column_count_mismatch(self):
        with pytest.raises(ColumnCountMismatch):
            parse_csv_record(self.SPEC, "100,read,10,bash,1,init")

    def test_quoted_cell_keeps_comma(self):
        rec = parse_csv_record(self.SPEC, '100,read,10,bash,1,init,"a,b.txt"')
        assert rec.resource.path_or_endpoint == "a,b.txt"

    def test_empty_cells_are_absent(self):
        rec = parse_csv_record(self.SPEC, "100,read,10,,,,/x")
        assert rec.comm == ""
        assert rec.ppid is None

    def test_non_numeric_pid_rejected(self):
        with pytest.raises(MalformedRecord):
            parse_csv_record(self.SPEC, "100,read,ten,bash,1,init,/x")

    def test_unknown_header_rejected(self):
        with pytest.raises(MalformedRecord):
            CsvHeaderSpec(["ts", "syscall", "pid", "color"])

    def test_header_needs_ts_and_syscall_and_subject(self):
        with pytest.raises(MalformedRecord):
            CsvHeaderSpec(["ts", "pid"])
        with pytest.raises(MalformedRecord):
            CsvHeaderSpec(["ts", "syscall"])
        CsvHeaderSpec(["ts", "syscall", "path"])  # resource-only is fine


class TestTimestamps:
    def test_integer_is_microseconds(self):
        assert parse_timestamp("100") == 100

    def test_float_is_seconds(self):
        assert parse_timestamp("1.5") == 1_500_000

    def test_iso_8601(self):
        assert parse_timestamp("1970-01-01T00:00:01") == 1_000_000
        assert parse_timestamp("2019-09-03 00:00:00") == 1567468800 * 1_000_000

    def test_garbage_rejected(self):
        with pytest.raises(MalformedRecord):
            parse_timestamp("yesterday")


def test_format_equivalence_same_line_graph():
    """One logical event via sysdig-json, sysdig-plain, and CSV yields the
    same line graph up to attrs."""
    payload = {"ts": 1000, "syscall": "write", "pid": 4667, "pname": "scp",
               "ppid": 4600, "ppname": "bash", "fd_name": "128.55.12.1:22"}
    sys_parser = SysdigParser("h1", list(payload))
    rec_json = sys_parser.parse_json(json.dumps(payload))
    rec_plain = SysdigParser("h1", list(payload)).parse_plain(
        " ".join(str(v) for v in payload.values()))
    spec = CsvHeaderSpec(list(payload))
    rec_csv = parse_csv_record(spec, ",".join(str(v) for v in payload.values()),
                               host="h1")

    shapes = []
    for rec in (rec_json, rec_plain, rec_csv):
        lg = build_line_graph(rec, HostState("h1"))
        shapes.append((
            [(n.sig.kind, n.sig.local_id, n.title) for n in lg.nodes],
            [(e.src.local_id, e.dst.local_id, e.rel, e.timestamps)
             for e in lg.edges],
        ))
    assert shapes[0] == shapes[1] == shapes[2]

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from graalf.ingest.audit import AuditParser, parse_audit_line
from graalf.ingest.records import EventRecord, HostState, Skip, StateOnly
from graalf.model import NodeKind


def audit(ts, event_id, rtype="SYSCALL", **kv):
    pairs = " ".join(f'{k}={v}' for k, v in kv.items())
    return f"type={rtype} msg=audit({ts}:{event_id}): {pairs}"


def syscall_line(ts, event_id, syscall, pid, **kv):
    kv.setdefault("success", "yes")
    return audit(ts, event_id, "SYSCALL", syscall=syscall, pid=pid, **kv)


def run(lines, state=None):
    state = state or HostState("h1")
    parser = AuditParser(state)
    out = []
    for line in lines:
        out.extend(parse_audit_line(line, parser))
    out.extend(parser.finish())
    return out, state


class TestFdTable:
    def test_open_populates_table(self):
        out, state = run([
            syscall_line("100.000", 1, 2, 49025, exit=3),
            audit("100.000", 1, "PATH", name='"/etc/password"', inode=18957),
            audit("100.000", 1, "EOE"),
        ])
        assert [type(o).__name__ for o in out] == ["StateOnly"]
        ref = state.fd_lookup(49025, 3)
        assert ref.path_or_endpoint == "/etc/password"
        assert ref.inode == "18957"

    def test_read_resolves_through_table(self):
        out, _ = run([
            syscall_line("100.000", 1, 2, 49025, exit=3),
            audit("100.000", 1, "PATH", name='"/etc/password"', inode=18957),
            audit("100.000", 1, "EOE"),
            syscall_line("100.100", 2, 0, 49025, a0=3, exit=512,
                         comm='"vsftpd"'),
            audit("100.100", 2, "EOE"),
        ])
        rec = [o for o in out if isinstance(o, EventRecord)][0]
        assert rec.syscall == "read"
        assert rec.pid == 49025
        assert rec.resource.path_or_endpoint == "/etc/password"
        assert rec.resource.inode == "18957"

    def test_dup_aliases_same_resource(self):
        out, state = run([
            syscall_line("1.0", 1, 2, 10, exit=3),
            audit("1.0", 1, "PATH", name='"/tmp/x"'),
            audit("1.0", 1, "EOE"),
            syscall_line("1.1", 2, 32, 10, a0=3, exit=7),  # dup -> fd 7
            audit("1.1", 2, "EOE"),
            syscall_line("1.2", 3, 0, 10, a0=7, exit=10),  # read fd 7
            audit("1.2", 3, "EOE"),
        ])
        rec = [o for o in out if isinstance(o, EventRecord)][0]
        assert rec.resource.path_or_endpoint == "/tmp/x"
        assert state.fd_lookup(10, 3) is state.fd_lookup(10, 7)

    def test_close_removes_entry(self):
        _, state = run([
            syscall_line("1.0", 1, 2, 10, exit=3),
            audit("1.0", 1, "PATH", name='"/tmp/x"'),
            audit("1.0", 1, "EOE"),
            syscall_line("1.1", 2, 3, 10, a0=3),  # close
            audit("1.1", 2, "EOE"),
        ])
        assert state.fd_lookup(10, 3) is None

    def test_unresolved_fd_gets_scoped_placeholder(self):
        out, _ = run([
            syscall_line("1.0", 1, 0, 10, a0=5, exit=16),
            audit("1.0", 1, "EOE"),
        ])
        rec = out[0]
        assert isinstance(rec, EventRecord)
        assert rec.resource.path_or_endpoint == "fd:5(unresolved)"
        assert rec.resource.scope == "10"
        assert rec.resource.signature("h1").local_id == "10/fd:5(unresolved)"

    def test_exit_garbage_collects_fd_table(self):
        _, state = run([
            syscall_line("1.0", 1, 2, 10, exit=3),
            audit("1.0", 1, "PATH", name='"/tmp/x"'),
            audit("1.0", 1, "EOE"),
            syscall_line("1.1", 2, 60, 10),  # exit
            audit("1.1", 2, "EOE"),
        ])
        assert state.fd_lookup(10, 3) is None


class TestSockets:
    def test_connect_uses_sockaddr_and_registers_fd(self):
        out, state = run([
            syscall_line("1.0", 1, 42, 10, a0=4, comm='"scp"'),
            audit("1.0", 1, "SOCKADDR", addr="128.55.12.167", port=4343),
            audit("1.0", 1, "EOE"),
            syscall_line("1.1", 2, 44, 10, a0=4, exit=99),  # sendto on fd 4
            audit("1.1", 2, "EOE"),
        ])
        records = [o for o in out if isinstance(o, EventRecord)]
        assert records[0].syscall == "connect"
        assert records[0].resource.kind is NodeKind.SOCKET
        assert records[0].resource.path_or_endpoint == "128.55.12.167:4343"
        assert records[1].resource.path_or_endpoint == "128.55.12.167:4343"

    def test_hex_saddr_decodes_af_inet(self):
        # AF_INET (0200), port 4343 (0x10f7), 128.55.12.167
        saddr = "020010f7" + "80370ca7" + "0000000000000000"
        out, _ = run([
            syscall_line("1.0", 1, 42, 11, a0=3),
            audit("1.0", 1, "SOCKADDR", saddr=saddr),
            audit("1.0", 1, "EOE"),
        ])
        rec = out[0]
        assert rec.resource.path_or_endpoint == "128.55.12.167:4343"


class TestReassembly:
    def test_new_event_id_flushes_previous(self):
        parser = AuditParser(HostState("h1"))
        first = parser.feed(syscall_line("1.0", 1, 0, 10, a0=9, exit=1))
        assert first == []
        second = parser.feed(syscall_line("1.1", 2, 0, 10, a0=9, exit=1))
        assert len(second) == 1
        assert isinstance(second[0], EventRecord)

    def test_stale_pending_flushes_after_window(self):
        parser = AuditParser(HostState("h1"))
        parser.feed(syscall_line("1.0", 1, 0, 10, a0=9, exit=1))
        # same id but 3 s later: the old event completes first
        out = parser.feed(audit("4.0", 1, "PATH", name='"/late"'))
        assert len(out) == 1

    def test_fork_returns_child_in_retval(self):
        out, _ = run([
            syscall_line("1.0", 1, 57, 100, exit=101, comm='"bash"'),
            audit("1.0", 1, "EOE"),
        ])
        rec = out[0]
        assert rec.syscall == "fork"
        assert rec.retval == "101"

    def test_malformed_lines_skip_with_counter(self):
        parser = AuditParser(HostState("h1"))
        out = parser.feed("not an audit line at all")
        assert isinstance(out[0], Skip)
        out = parser.feed(audit("1.0", 5, "SYSCALL", pid=10))  # no syscall field
        out = parser.finish()
        assert isinstance(out[0], Skip)
        assert parser.skipped == 2

    def test_event_without_syscall_record_skips(self):
        out, _ = run([
            audit("1.0", 1, "PATH", name='"/x"'),
            audit("1.0", 1, "EOE"),
        ])
        assert isinstance(out[0], Skip)

    def test_failed_open_does_not_populate(self):
        _, state = run([
            syscall_line("1.0", 1, 2, 10, success="no", exit="-13"),
            audit("1.0", 1, "PATH", name='"/etc/shadow"'),
            audit("1.0", 1, "EOE"),
        ])
        assert state.fd_lookup(10, -13) is None
        assert not state.fd_table


# fd-table soundness: any open/dup/close/read interleaving resolves reads
# to what the latest matching open established (reference interpreter).
fd_ops = st.lists(
    st.tuples(st.sampled_from(["open", "dup", "close", "read"]),
              st.integers(3, 6),   # fd
              st.integers(3, 6),   # second fd (dup target)
              st.integers(0, 9)),  # path index
    min_size=1, max_size=40)


@settings(max_examples=150, deadline=None)
@given(fd_ops)
def test_fd_table_matches_reference_interpreter(ops):
    parser = AuditParser(HostState("h1"))
    reference: dict[int, str] = {}
    expectations = []  # (read index in stream, expected path or None)
    lines = []
    event_id = 0
    for op, fd, fd2, path_i in ops:
        event_id += 1
        ts = f"{event_id}.0"
        path = f"/p{path_i}"
        if op == "open":
            lines.append(syscall_line(ts, event_id, 2, 50, exit=fd))
            lines.append(audit(ts, event_id, "PATH", name=f'"{path}"'))
            lines.append(audit(ts, event_id, "EOE"))
            reference[fd] = path
        elif op == "dup":
            lines.append(syscall_line(ts, event_id, 32, 50, a0=fd, exit=fd2))
            lines.append(audit(ts, event_id, "EOE"))
            if fd in reference:
                reference[fd2] = reference[fd]
        elif op == "close":
            lines.append(syscall_line(ts, event_id, 3, 50, a0=fd))
            lines.append(audit(ts, event_id, "EOE"))
            reference.pop(fd, None)
        else:
            lines.append(syscall_line(ts, event_id, 0, 50, a0=fd, exit=4))
            lines.append(audit(ts, event_id, "EOE"))
            expectations.append(reference.get(fd))

    out = []
    for line in lines:
        out.extend(parser.feed(line))
    out.extend(parser.finish())
    reads = [o for o in out if isinstance(o, EventRecord) and o.syscall == "read"]
    assert len(reads) == len(expectations)
    for rec, expected in zip(reads, expectations):
        if expected is None:
            assert "(unresolved)" in rec.resource.path_or_endpoint
        else:
            assert rec.resource.path_or_endpoint == expected

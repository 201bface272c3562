"""Linux Audit log handler.

Audit events span several key=value records (SYSCALL plus PATH / SOCKADDR
lines) sharing an event id inside ``msg=audit(<secs>.<millis>:<id>)``.
Records are reassembled on that id with a 2 second window; descriptor
lifecycle calls (open/dup/close and process exit) only mutate the host's
fd table, while causal calls resolve their fd through it and come out as
EventRecords.
"""

from __future__ import annotations

import logging
import re

from graalf.ingest.records import (
    EventRecord,
    HostState,
    ResourceRef,
    Skip,
    StateOnly,
)
from graalf.model import NodeKind
from graalf.syscalls import syscall_name

log = logging.getLogger(__name__)

REASSEMBLY_WINDOW_US = 2_000_000

_MSG_RE = re.compile(r"msg=audit\((\d+)\.(\d+):(\d+)\)")
_KV_RE = re.compile(r'([A-Za-z_][\w.-]*)=("(?:[^"]*)"|\S+)')

# Syscalls that read their fd from a0 and produce a causal edge.
_FD_ARG_SYSCALLS = frozenset({
    "read", "readv", "pread64", "write", "writev", "pwrite64",
    "send", "sendto", "sendmsg", "recv", "recvfrom", "recvmsg",
})
_PATH_ARG_SYSCALLS = frozenset({
    "unlink", "unlinkat", "rename", "renameat", "renameat2",
    "chmod", "fchmodat", "execve", "truncate",
})
_OPEN_SYSCALLS = frozenset({"open", "openat", "creat"})
_DUP_SYSCALLS = frozenset({"dup", "dup2", "dup3"})
_EXIT_SYSCALLS = frozenset({"exit", "exit_group"})
_FORK_SYSCALLS = frozenset({"fork", "vfork", "clone"})


def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    return value


def _parse_saddr(hex_str: str) -> tuple[str, str] | None:
    """Decode an AF_INET sockaddr hex dump into (addr, port)."""
    try:
        raw = bytes.fromhex(hex_str)
    except ValueError:
        return None
    if len(raw) < 8:
        return None
    family = raw[0] | (raw[1] << 8)
    if family != 2:  # AF_INET only
        return None
    port = (raw[2] << 8) | raw[3]
    addr = ".".join(str(b) for b in raw[4:8])
    return addr, str(port)


class _PendingEvent:
    __slots__ = ("event_id", "ts", "syscall_fields", "paths", "sockaddr")

    def __init__(self, event_id: int, ts: int):
        self.event_id = event_id
        self.ts = ts
        self.syscall_fields: dict[str, str] | None = None
        self.paths: list[tuple[str, str | None]] = []  # (name, inode)
        self.sockaddr: tuple[str, str] | None = None


class AuditParser:
    """Streaming reassembler and interpreter for audit records."""

    def __init__(self, state: HostState):
        self.state = state
        self._pending: _PendingEvent | None = None
        self.skipped = 0

    def feed(self, line: str) -> list[EventRecord | StateOnly | Skip]:
        """Consume one raw line; return the outcomes it completes."""
        line = line.strip()
        if not line:
            return []
        m = _MSG_RE.search(line)
        if m is None:
            self.skipped += 1
            return [Skip("no audit(...) header")]
        secs, millis, event_id = int(m.group(1)), m.group(2), int(m.group(3))
        ts = secs * 1_000_000 + int(millis.ljust(3, "0")[:3]) * 1000

        out: list[EventRecord | StateOnly | Skip] = []
        pending = self._pending
        if pending is not None and (
                pending.event_id != event_id
                or ts - pending.ts > REASSEMBLY_WINDOW_US):
            out.append(self._finalize(pending))
            self._pending = pending = None

        fields = {k: _unquote(v) for k, v in _KV_RE.findall(line)}
        rtype = fields.get("type", "").upper()

        if rtype == "EOE":
            if pending is not None and pending.event_id == event_id:
                out.append(self._finalize(pending))
                self._pending = None
            return out

        if pending is None:
            pending = _PendingEvent(event_id, ts)
            self._pending = pending

        if rtype == "SYSCALL":
            pending.syscall_fields = fields
        elif rtype == "PATH":
            name = fields.get("name")
            if name and name != "(null)":
                pending.paths.append((name, fields.get("inode")))
        elif rtype == "SOCKADDR":
            if "addr" in fields and "port" in fields:
                pending.sockaddr = (fields["addr"], fields["port"])
            elif "saddr" in fields:
                decoded = _parse_saddr(fields["saddr"])
                if decoded:
                    pending.sockaddr = decoded
        # CWD, PROCTITLE etc. are ignored; they neither name a resource nor
        # change classification.
        return out

    def finish(self) -> list[EventRecord | StateOnly | Skip]:
        """Flush the event still pending at end of stream."""
        if self._pending is None:
            return []
        out = [self._finalize(self._pending)]
        self._pending = None
        return out

    # -- event interpretation -------------------------------------------------

    def _finalize(self, ev: _PendingEvent) -> EventRecord | StateOnly | Skip:
        f = ev.syscall_fields
        if f is None:
            self.skipped += 1
            return Skip("event without SYSCALL record")
        raw_sys = f.get("syscall")
        if raw_sys is None:
            self.skipped += 1
            log.warning("audit event %d has no syscall field", ev.event_id)
            return Skip("missing syscall")
        try:
            name = syscall_name(int(raw_sys))
        except ValueError:
            name = raw_sys.lower()

        try:
            pid = int(f["pid"]) if "pid" in f else None
        except ValueError:
            pid = None
        if pid is None:
            self.skipped += 1
            log.warning("audit event %d has no pid", ev.event_id)
            return Skip("missing pid")

        success = f.get("success", "yes") != "no"

        def intf(key: str) -> int | None:
            v = f.get(key)
            if v is None:
                return None
            try:
                return int(v, 16) if key.startswith("a") else int(v)
            except ValueError:
                return None

        exit_code = intf("exit")
        a0 = intf("a0")
        a1 = intf("a1")

        state = self.state
        if name in _OPEN_SYSCALLS:
            if success and exit_code is not None and exit_code >= 0 and ev.paths:
                path, inode = ev.paths[-1]
                state.fd_open(pid, exit_code, ResourceRef(NodeKind.FILE, path, inode))
            return StateOnly(name)
        if name == "close":
            if a0 is not None:
                state.fd_close(pid, a0)
            return StateOnly(name)
        if name in _DUP_SYSCALLS:
            new_fd = exit_code if name == "dup" else a1
            if success and a0 is not None and new_fd is not None and new_fd >= 0:
                state.fd_dup(pid, a0, new_fd)
            return StateOnly(name)
        if name == "socket":
            if success and exit_code is not None and exit_code >= 0:
                state.fd_open(pid, exit_code,
                              ResourceRef(NodeKind.SOCKET, f"sock:{exit_code}",
                                          scope=str(pid)))
            return StateOnly(name)
        if name in _EXIT_SYSCALLS:
            state.gc_process(pid)
            return StateOnly(name)

        resource: ResourceRef | None = None
        if name in _FD_ARG_SYSCALLS:
            if a0 is not None:
                resource = state.fd_lookup(pid, a0)
                if resource is None:
                    resource = ResourceRef(NodeKind.FILE, f"fd:{a0}(unresolved)",
                                           scope=str(pid))
        elif name in ("connect", "accept", "accept4", "bind"):
            if ev.sockaddr:
                addr, port = ev.sockaddr
                resource = ResourceRef(NodeKind.SOCKET, f"{addr}:{port}")
                fd = exit_code if name.startswith("accept") else a0
                if success and fd is not None and fd >= 0:
                    state.fd_open(pid, fd, resource)
            elif a0 is not None:
                resource = state.fd_lookup(pid, a0)
        elif name in _PATH_ARG_SYSCALLS and ev.paths:
            path, inode = ev.paths[0] if name == "execve" else ev.paths[-1]
            resource = ResourceRef(NodeKind.FILE, path, inode)

        retval = None
        if name in _FORK_SYSCALLS:
            if not success or not exit_code or exit_code <= 0:
                return StateOnly(name)
            retval = str(exit_code)
        elif exit_code is not None:
            retval = str(exit_code)

        return EventRecord(
            host=state.host,
            ts=ev.ts,
            syscall=name,
            pid=pid,
            ppid=intf("ppid"),
            tid=intf("tid"),
            unit_id=f.get("unit"),
            comm=f.get("comm", ""),
            exe=f.get("exe", ""),
            fd=a0 if name in _FD_ARG_SYSCALLS else None,
            resource=resource,
            args=f.get("a1") if name in _FD_ARG_SYSCALLS else None,
            retval=retval,
        )


def parse_audit_line(line: str, parser: AuditParser) -> list[EventRecord | StateOnly | Skip]:
    """Feed one audit line through a reassembling parser.

    Because events span multiple records, the outcome list describes
    events *completed* by this line (usually the previous event, flushed
    when a new event id shows up). Call ``parser.finish()`` at stream end.
    """
    return parser.feed(line)

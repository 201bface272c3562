"""Intermediate event records and per-host parser state.

Every log handler normalizes its input into :class:`EventRecord`; the
line-graph builder and the flat journal both consume that shape. The
:class:`HostState` tables (open file descriptors, known processes,
threads, execution units) carry the cross-record context a single log
line does not contain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

from graalf.model import HostId, NodeKind, SignatureKey, Timestamp


@dataclass
class ResourceRef:
    """A resolved file/socket/pipe reference attached to an event.

    ``scope`` is set for placeholder resources (unresolved fds, unbound
    sockets) so they stay private to the owning process instead of
    aliasing across the host.
    """

    kind: NodeKind
    path_or_endpoint: str
    inode: str | None = None
    scope: str | None = None

    def signature(self, host: HostId) -> SignatureKey:
        if self.scope is not None:
            return SignatureKey(host, self.kind,
                                f"{self.scope}/{self.path_or_endpoint}", 0)
        if self.kind is NodeKind.FILE and self.inode:
            return SignatureKey(host, self.kind,
                                f"{self.inode}:{self.path_or_endpoint}", 0)
        return SignatureKey(host, self.kind, self.path_or_endpoint, 0)

    def title(self) -> str:
        return self.path_or_endpoint


@dataclass
class EventRecord:
    """One normalized log event."""

    host: HostId
    ts: Timestamp
    syscall: str
    pid: int | None = None
    ppid: int | None = None
    ancestor_pid: int | None = None
    tid: int | None = None
    unit_id: str | None = None
    comm: str = ""
    exe: str = ""
    ppname: str = ""
    ancestor_name: str = ""
    fd: int | None = None
    resource: ResourceRef | None = None
    args: str | None = None
    retval: str | None = None


@dataclass
class StateOnly:
    """Outcome of a record that only mutated the host state tables."""

    syscall: str = ""


@dataclass
class Skip:
    """Outcome of a record that could not or need not be processed."""

    reason: str = ""


@dataclass
class ProcEntry:
    epoch: Timestamp
    title: str
    ppid: int | None = None
    spawn_emitted: bool = False
    title_observed: bool = False  # False while the title is a pid placeholder


@dataclass
class ChildEntry:
    epoch: Timestamp


class EpochSource:
    """Historical first-seen times, consulted when replaying stored rows.

    Live ingestion discovers epochs as records arrive; a replay (e.g. from
    the flat journal) must reuse the historical ones so node signatures
    come out identical. Lookups returning None fall back to the record's
    own timestamp.
    """

    def process_epoch(self, pid: int) -> Timestamp | None:
        raise NotImplementedError

    def thread_epoch(self, pid: int, tid: str) -> Timestamp | None:
        raise NotImplementedError

    def unit_epoch(self, tid: str, unit_id: str) -> Timestamp | None:
        raise NotImplementedError

    def process_title(self, pid: int) -> str | None:
        return None


@dataclass
class HostState:
    """Per-host parser state: fd table, process/thread/unit tables.

    Confined to one ingestion worker; there is no locking here.
    """

    host: HostId
    fd_table: dict[tuple[int, int], ResourceRef] = field(default_factory=dict)
    proc_table: dict[int, ProcEntry] = field(default_factory=dict)
    thread_table: dict[tuple[int, str], ChildEntry] = field(default_factory=dict)
    unit_table: dict[tuple[str, str], ChildEntry] = field(default_factory=dict)
    epoch_source: EpochSource | None = None

    # -- process / thread / unit observation --------------------------------

    def observe_process(self, pid: int, ts: Timestamp, title: str = "",
                        ppid: int | None = None) -> tuple[ProcEntry, bool]:
        """Register a pid sighting; returns (entry, first_time_seen)."""
        entry = self.proc_table.get(pid)
        if entry is None:
            epoch = ts
            if self.epoch_source is not None:
                known = self.epoch_source.process_epoch(pid)
                if known is not None:
                    epoch = known
                canonical = self.epoch_source.process_title(pid)
                if canonical:
                    title = canonical
            entry = ProcEntry(epoch=epoch, title=title or f"pid {pid}",
                              ppid=ppid, title_observed=bool(title))
            self.proc_table[pid] = entry
            return entry, True
        if title and not entry.title_observed:
            entry.title = title
            entry.title_observed = True
        if ppid is not None and entry.ppid is None:
            entry.ppid = ppid
        return entry, False

    def observe_thread(self, pid: int, tid: str, ts: Timestamp) -> tuple[ChildEntry, bool]:
        key = (pid, tid)
        entry = self.thread_table.get(key)
        if entry is None:
            epoch = ts
            if self.epoch_source is not None:
                known = self.epoch_source.thread_epoch(pid, tid)
                if known is not None:
                    epoch = known
            entry = ChildEntry(epoch=epoch)
            self.thread_table[key] = entry
            return entry, True
        return entry, False

    def observe_unit(self, tid: str, unit_id: str, ts: Timestamp) -> tuple[ChildEntry, bool]:
        key = (tid, unit_id)
        entry = self.unit_table.get(key)
        if entry is None:
            epoch = ts
            if self.epoch_source is not None:
                known = self.epoch_source.unit_epoch(tid, unit_id)
                if known is not None:
                    epoch = known
            entry = ChildEntry(epoch=epoch)
            self.unit_table[key] = entry
            return entry, True
        return entry, False

    # -- fd table ------------------------------------------------------------

    def fd_open(self, pid: int, fd: int, ref: ResourceRef) -> None:
        self.fd_table[(pid, fd)] = ref

    def fd_lookup(self, pid: int, fd: int) -> ResourceRef | None:
        return self.fd_table.get((pid, fd))

    def fd_close(self, pid: int, fd: int) -> None:
        self.fd_table.pop((pid, fd), None)

    def fd_dup(self, pid: int, old_fd: int, new_fd: int) -> bool:
        ref = self.fd_table.get((pid, old_fd))
        if ref is None:
            return False
        self.fd_table[(pid, new_fd)] = ref  # alias: same ResourceRef object
        return True

    def gc_process(self, pid: int) -> None:
        """Flush a finished process's descriptors (exit / exit_group)."""
        for key in [k for k in self.fd_table if k[0] == pid]:
            del self.fd_table[key]


# -- shared field vocabulary -------------------------------------------------

# Canonical column/key names accepted by the CSV and Sysdig handlers, with
# the aliases Sysdig's own formatter emits.
FIELD_ALIASES = {
    "host": "host",
    "ts": "ts",
    "evt.time": "ts",
    "time": "ts",
    "syscall": "syscall",
    "evt.type": "syscall",
    "pid": "pid",
    "proc.pid": "pid",
    "pname": "pname",
    "comm": "pname",
    "proc.name": "pname",
    "exe": "exe",
    "proc.exe": "exe",
    "ppid": "ppid",
    "proc.ppid": "ppid",
    "ppname": "ppname",
    "proc.pname": "ppname",
    "ancestor_pid": "ancestor_pid",
    "proc.apid": "ancestor_pid",
    "ancestor_name": "ancestor_name",
    "proc.aname": "ancestor_name",
    "tid": "tid",
    "thread.tid": "tid",
    "unit_id": "unit_id",
    "unit": "unit_id",
    "fd": "fd",
    "fd.num": "fd",
    "fd_kind": "fd_kind",
    "fd.type": "fd_kind",
    "fd_name": "fd_name",
    "fd.name": "fd_name",
    "fd_inode": "fd_inode",
    "fd.inode": "fd_inode",
    "path": "path",
    "inode": "inode",
    "addr": "addr",
    "port": "port",
    "pipe_id": "pipe_id",
    "args": "args",
    "evt.args": "args",
    "retval": "retval",
    "evt.res": "retval",
}

REQUIRED_ANY_RESOURCE = ("fd_name", "path", "addr", "pipe_id")

_SOCKET_ENDPOINT = re.compile(r"^.+:\d+$")
_ISO_TS = re.compile(r"^\d{4}-\d{2}-\d{2}[T ]")


class MalformedRecord(ValueError):
    """A record is missing ts or syscall, or a typed field fails to parse."""


def canonical_field(name: str) -> str:
    key = name.strip().lower()
    if key not in FIELD_ALIASES:
        raise MalformedRecord(f"unknown field name {name!r}")
    return FIELD_ALIASES[key]


@dataclass
class CsvHeaderSpec:
    """Ordered column layout for the generic CSV handler."""

    columns: list[str]

    def __post_init__(self) -> None:
        self.columns = [canonical_field(c) for c in self.columns]
        if "ts" not in self.columns or "syscall" not in self.columns:
            raise MalformedRecord("CSV header must contain ts and syscall columns")
        if "pid" not in self.columns and not any(
                c in self.columns for c in REQUIRED_ANY_RESOURCE):
            raise MalformedRecord("CSV header must contain a pid or resource column")


def parse_timestamp(value: str) -> Timestamp:
    """Parse a timestamp field: integer microseconds, float seconds, or ISO-8601."""
    value = value.strip()
    if _ISO_TS.match(value):
        dt = datetime.fromisoformat(value.replace(" ", "T"))
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp() * 1_000_000)
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return int(float(value) * 1_000_000)
    except ValueError as exc:
        raise MalformedRecord(f"bad timestamp {value!r}") from exc


def infer_resource_kind(fd_kind: str | None, name: str) -> NodeKind:
    """Map an explicit fd type (or the endpoint's shape) to a node kind."""
    if fd_kind:
        k = fd_kind.strip().lower()
        if k in ("socket", "soc", "ipv4", "ipv6", "4t", "6t", "net"):
            return NodeKind.SOCKET
        if k in ("pipe", "fifo", "p"):
            return NodeKind.PIPE
        return NodeKind.FILE
    if _SOCKET_ENDPOINT.match(name) and not name.startswith("/"):
        return NodeKind.SOCKET
    return NodeKind.FILE


def record_from_fields(host: HostId, fields: dict[str, str]) -> EventRecord:
    """Assemble an EventRecord from canonical field name -> raw value.

    Empty values count as absent. Raises MalformedRecord when ts or
    syscall is missing, or when neither a pid nor a resource is present.
    """
    fields = {k: v for k, v in fields.items() if v not in (None, "")}
    if "ts" not in fields or "syscall" not in fields:
        raise MalformedRecord("record is missing ts or syscall")

    def as_int(name: str) -> int | None:
        if name not in fields:
            return None
        try:
            return int(fields[name])
        except ValueError as exc:
            raise MalformedRecord(f"non-numeric {name}: {fields[name]!r}") from exc

    resource = None
    if "fd_name" in fields:
        name = fields["fd_name"]
        kind = infer_resource_kind(fields.get("fd_kind"), name)
        resource = ResourceRef(kind, name, fields.get("fd_inode"))
    elif "path" in fields:
        resource = ResourceRef(NodeKind.FILE, fields["path"], fields.get("inode"))
    elif "addr" in fields and "port" in fields:
        resource = ResourceRef(NodeKind.SOCKET, f"{fields['addr']}:{fields['port']}")
    elif "pipe_id" in fields:
        resource = ResourceRef(NodeKind.PIPE, fields["pipe_id"])

    rec = EventRecord(
        host=fields.get("host", host),
        ts=parse_timestamp(fields["ts"]),
        syscall=fields["syscall"].strip().lower(),
        pid=as_int("pid"),
        ppid=as_int("ppid"),
        ancestor_pid=as_int("ancestor_pid"),
        tid=as_int("tid"),
        unit_id=fields.get("unit_id"),
        comm=fields.get("pname", ""),
        exe=fields.get("exe", ""),
        ppname=fields.get("ppname", ""),
        ancestor_name=fields.get("ancestor_name", ""),
        fd=as_int("fd"),
        resource=resource,
        args=fields.get("args"),
        retval=fields.get("retval"),
    )
    if rec.pid is None and rec.resource is None:
        raise MalformedRecord("record carries neither a pid nor a resource")
    return rec

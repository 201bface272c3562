"""Durable embedded backend: flat event journal and two-table snapshots.

The journal is one TSV row per causal event, in arrival order -- the
uncompressed source of truth. Compression is applied at load/query time,
so any store level can be reconstructed from it. Layer-batched expansion
(`expand`) replays matching rows through the regular line-graph builder,
reusing historical first-seen epochs so node identities come out exactly
as live ingestion produced them.

The two-table snapshot (vertices.tsv / edges.tsv) persists a store's
compressed graph verbatim and round-trips byte-identically.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from graalf.dates import ts_matches
from graalf.ingest.linegraph import build_line_graph
from graalf.ingest.records import EpochSource, EventRecord, HostState, ResourceRef
from graalf.model import (
    CompressionLevel,
    EdgeKey,
    EventEdge,
    LineGraph,
    NodeKind,
    ProvNode,
    SignatureKey,
    Timestamp,
    collapse_timestamps,
)
from graalf.store import GraphStore, NodeCriteria, title_matches

FORMAT_TAG = "#graalf-v1"

JOURNAL_COLUMNS = [
    "host", "ts", "syscall", "pid", "pname", "ppid", "ppname",
    "ancestor_pid", "ancestor_name", "tid", "unit_id",
    "fd_kind", "fd_title", "fd_inode", "args", "retval",
]

VERTEX_COLUMNS = ["host", "kind", "local_id", "epoch", "title", "attrs"]
EDGE_COLUMNS = [
    "src_host", "src_kind", "src_id", "src_epoch",
    "dst_host", "dst_kind", "dst_id", "dst_epoch",
    "rel", "count", "timestamps", "attrs",
]

_FORK_SYSCALLS = frozenset({"fork", "vfork", "clone"})

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}


class EmptyCriteria(ValueError):
    """Raised for queries with no criteria; a full scan's output would be
    partial and untrustworthy, so it is refused up front."""


class IoError(OSError):
    pass


def esc(value: str) -> str:
    if not any(c in value for c in "\\\t\n\r"):
        return value
    for raw, cooked in _ESCAPES.items():
        value = value.replace(raw, cooked)
    return value


def unesc(value: str) -> str:
    if "\\" not in value:
        return value
    out, i = [], 0
    while i < len(value):
        c = value[i]
        if c == "\\" and i + 1 < len(value):
            nxt = value[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def attrs_to_field(attrs: dict[str, str]) -> str:
    parts = []
    for k in sorted(attrs):
        key = k.replace("\\", "\\\\").replace(";", "\\;").replace("=", "\\=")
        val = attrs[k].replace("\\", "\\\\").replace(";", "\\;").replace("=", "\\=")
        parts.append(f"{key}={val}")
    return ";".join(parts)


def attrs_from_field(text: str) -> dict[str, str]:
    if not text:
        return {}
    attrs: dict[str, str] = {}
    parts, cur, i = [], [], 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            cur.append(text[i:i + 2])
            i += 2
            continue
        if c == ";":
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(c)
        i += 1
    parts.append("".join(cur))
    for part in parts:
        if not part:
            continue
        key, val, in_key = [], [], True
        j = 0
        while j < len(part):
            c = part[j]
            if c == "\\" and j + 1 < len(part):
                (key if in_key else val).append(part[j + 1])
                j += 2
                continue
            if c == "=" and in_key:
                in_key = False
            else:
                (key if in_key else val).append(c)
            j += 1
        attrs["".join(key)] = "".join(val)
    return attrs


@dataclass
class FlatJournalRow:
    """One journal row; field order matches JOURNAL_COLUMNS."""

    host: str
    ts: Timestamp
    syscall: str
    pid: int | None = None
    pname: str = ""
    ppid: int | None = None
    ppname: str = ""
    ancestor_pid: int | None = None
    ancestor_name: str = ""
    tid: int | None = None
    unit_id: str = ""
    fd_kind: str = ""
    fd_title: str = ""
    fd_inode: str = ""
    args: str = ""
    retval: str = ""

    @classmethod
    def from_record(cls, rec: EventRecord) -> "FlatJournalRow":
        title = rec.comm or (rec.exe.rsplit("/", 1)[-1] if rec.exe else "")
        fd_kind = fd_title = fd_inode = ""
        if rec.resource is not None:
            fd_kind = rec.resource.kind.value
            fd_title = rec.resource.path_or_endpoint
            fd_inode = rec.resource.inode or ""
        return cls(
            host=rec.host, ts=rec.ts, syscall=rec.syscall, pid=rec.pid,
            pname=title, ppid=rec.ppid, ppname=rec.ppname,
            ancestor_pid=rec.ancestor_pid, ancestor_name=rec.ancestor_name,
            tid=rec.tid, unit_id=rec.unit_id or "",
            fd_kind=fd_kind, fd_title=fd_title, fd_inode=fd_inode,
            args=rec.args or "", retval=rec.retval or "",
        )

    def to_record(self) -> EventRecord:
        resource = None
        if self.fd_title:
            kind = NodeKind(self.fd_kind) if self.fd_kind else NodeKind.FILE
            # Placeholder resources ("fd:N(unresolved)", "sock:N") are
            # process-scoped; the scope is reconstructed from the pid.
            scope = None
            if (self.fd_title.endswith("(unresolved)")
                    or self.fd_title.startswith("sock:")):
                scope = str(self.pid)
            resource = ResourceRef(kind, self.fd_title,
                                   self.fd_inode or None, scope)
        return EventRecord(
            host=self.host, ts=self.ts, syscall=self.syscall, pid=self.pid,
            ppid=self.ppid, ancestor_pid=self.ancestor_pid,
            tid=self.tid, unit_id=self.unit_id or None,
            comm=self.pname, ppname=self.ppname,
            ancestor_name=self.ancestor_name, resource=resource,
            args=self.args or None, retval=self.retval or None,
        )

    def to_tsv(self) -> str:
        cells = [
            self.host, str(self.ts), self.syscall,
            "" if self.pid is None else str(self.pid), self.pname,
            "" if self.ppid is None else str(self.ppid), self.ppname,
            "" if self.ancestor_pid is None else str(self.ancestor_pid),
            self.ancestor_name,
            "" if self.tid is None else str(self.tid), self.unit_id,
            self.fd_kind, self.fd_title, self.fd_inode, self.args, self.retval,
        ]
        return "\t".join(esc(c) for c in cells)

    @classmethod
    def from_tsv(cls, line: str) -> "FlatJournalRow":
        cells = [unesc(c) for c in line.rstrip("\n").split("\t")]
        if len(cells) != len(JOURNAL_COLUMNS):
            raise IoError(f"journal row has {len(cells)} cells")

        def opt_int(v: str) -> int | None:
            return int(v) if v else None

        return cls(
            host=cells[0], ts=int(cells[1]), syscall=cells[2],
            pid=opt_int(cells[3]), pname=cells[4], ppid=opt_int(cells[5]),
            ppname=cells[6], ancestor_pid=opt_int(cells[7]),
            ancestor_name=cells[8], tid=opt_int(cells[9]), unit_id=cells[10],
            fd_kind=cells[11], fd_title=cells[12], fd_inode=cells[13],
            args=cells[14], retval=cells[15],
        )


@dataclass
class _ProcInfo:
    epoch: Timestamp
    title: str = ""
    materialized: bool = False  # appeared as pid / ppid / fork child
    spawn_emitted: bool = False


class EpochIndex(EpochSource):
    """First-seen times and canonical titles, derived from the journal.

    The scan simulates exactly the observation order live ingestion used,
    so replayed node signatures and hierarchy-edge timestamps match.
    """

    def __init__(self) -> None:
        self.procs: dict[int, _ProcInfo] = {}
        self.threads: dict[tuple[int, str], Timestamp] = {}
        self.units: dict[tuple[str, str], Timestamp] = {}
        self.built_upto = 0

    def extend(self, rows: list[FlatJournalRow]) -> None:
        for row in rows[self.built_upto:]:
            self._scan_row(row)
        self.built_upto = len(rows)

    def _register(self, pid: int, ts: Timestamp, title: str, materialized: bool) -> _ProcInfo:
        info = self.procs.get(pid)
        if info is None:
            info = _ProcInfo(epoch=ts, title=title, materialized=materialized)
            self.procs[pid] = info
        else:
            if title and not info.title:
                info.title = title
            info.materialized = info.materialized or materialized
        return info

    def _scan_row(self, row: FlatJournalRow) -> None:
        if row.pid is None:
            return
        ts = row.ts
        if row.ancestor_pid is not None:
            self._register(row.ancestor_pid, ts, row.ancestor_name, False)
        info = self._register(row.pid, ts, row.pname, True)
        if row.ppid is not None and not info.spawn_emitted:
            self._register(row.ppid, ts, row.ppname, True)
            info.spawn_emitted = True
        if row.syscall in _FORK_SYSCALLS:
            child = _fork_child(row)
            if child is not None:
                c_info = self._register(child, ts, "", True)
                c_info.spawn_emitted = True
            return
        tid_str = str(row.tid) if row.tid is not None else f"{row.pid}.t0"
        self.threads.setdefault((row.pid, tid_str), ts)
        unit_id = row.unit_id or "u0"
        self.units.setdefault((tid_str, unit_id), ts)

    # EpochSource interface ---------------------------------------------------

    def process_epoch(self, pid: int) -> Timestamp | None:
        info = self.procs.get(pid)
        return info.epoch if info else None

    def thread_epoch(self, pid: int, tid: str) -> Timestamp | None:
        return self.threads.get((pid, tid))

    def unit_epoch(self, tid: str, unit_id: str) -> Timestamp | None:
        return self.units.get((tid, unit_id))

    def process_title(self, pid: int) -> str | None:
        info = self.procs.get(pid)
        return (info.title or None) if info else None


def _fork_child(row: FlatJournalRow) -> int | None:
    if not row.retval:
        return None
    try:
        child = int(row.retval)
    except ValueError:
        return None
    return child if child > 0 else None


@dataclass
class ReplayCursor:
    """Per-traversal replay context: delivered-row set and host states."""

    backend: "JournalBackend"
    seen: set[int] = field(default_factory=set)
    states: dict[str, HostState] = field(default_factory=dict)

    def state_for(self, host: str) -> HostState:
        state = self.states.get(host)
        if state is None:
            state = HostState(host, epoch_source=self.backend.index)
            self.states[host] = state
        return state


class JournalBackend:
    """Append-only flat journal with query-side reconstruction."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.path = self.root / "journal.tsv"
        self.rows: list[FlatJournalRow] = []
        self.index = EpochIndex()
        self._sig_rows: dict[SignatureKey, list[int]] = {}
        self._indexed_upto = 0
        self._handle = None
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#") or not line.strip():
                    continue
                self.rows.append(FlatJournalRow.from_tsv(line))

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    # -- append side ------------------------------------------------------------

    def append_event(self, row: FlatJournalRow) -> int:
        """Append one row; returns its offset. Durable after flush()."""
        if self._handle is None:
            new = not self.path.exists() or self.path.stat().st_size == 0
            self._handle = open(self.path, "a", encoding="utf-8")
            if new:
                self._handle.write("\t".join([FORMAT_TAG] + JOURNAL_COLUMNS[1:]) + "\n")
        offset = len(self.rows)
        self.rows.append(row)
        self._handle.write(row.to_tsv() + "\n")
        return offset

    def append_record(self, rec: EventRecord) -> int:
        return self.append_event(FlatJournalRow.from_record(rec))

    def flush(self) -> None:
        if self._handle is not None:
            self._handle.flush()

    # -- scan side ---------------------------------------------------------------

    def scan_range(self, t0: Timestamp, t1: Timestamp) -> list[FlatJournalRow]:
        return [r for r in self.rows if t0 <= r.ts <= t1]

    def min_ts(self) -> Timestamp | None:
        return min((r.ts for r in self.rows), default=None)

    def _ensure_index(self) -> None:
        if self._indexed_upto == len(self.rows) and self.index.built_upto == len(self.rows):
            return
        self.index.extend(self.rows)
        for offset in range(self._indexed_upto, len(self.rows)):
            for sig in self._row_sigs(offset):
                self._sig_rows.setdefault(sig, []).append(offset)
        self._indexed_upto = len(self.rows)

    def _row_sigs(self, offset: int) -> list[SignatureKey]:
        """Every node signature the row's line graph may contain."""
        row = self.rows[offset]
        if row.pid is None:
            rec = row.to_record()
            return [rec.resource.signature(row.host)] if rec.resource else []
        sigs = []
        host = row.host
        index = self.index
        sigs.append(SignatureKey(host, NodeKind.PROCESS, str(row.pid),
                                 index.process_epoch(row.pid) or row.ts))
        if row.ppid is not None:
            sigs.append(SignatureKey(host, NodeKind.PROCESS, str(row.ppid),
                                     index.process_epoch(row.ppid) or row.ts))
        if row.syscall in _FORK_SYSCALLS:
            child = _fork_child(row)
            if child is not None:
                sigs.append(SignatureKey(host, NodeKind.PROCESS, str(child),
                                         index.process_epoch(child) or row.ts))
            return sigs
        tid_str = str(row.tid) if row.tid is not None else f"{row.pid}.t0"
        t_epoch = index.thread_epoch(row.pid, tid_str) or row.ts
        sigs.append(SignatureKey(host, NodeKind.THREAD, tid_str, t_epoch))
        unit_id = row.unit_id or "u0"
        u_epoch = index.unit_epoch(tid_str, unit_id) or row.ts
        sigs.append(SignatureKey(host, NodeKind.UNIT, f"{tid_str}.{unit_id}", u_epoch))
        rec = row.to_record()
        if rec.resource is not None:
            sigs.append(rec.resource.signature(host))
        return sigs

    def cursor(self) -> ReplayCursor:
        self._ensure_index()
        return ReplayCursor(self)

    # -- node selection ------------------------------------------------------------

    def select(self, criteria: NodeCriteria,
               level: CompressionLevel = CompressionLevel.C1) -> list[ProvNode]:
        """Materialize nodes matching the criteria from journal columns.

        Process criteria consult the pname / ppname / ancestor_name and pid
        columns; file/socket criteria consult the fd columns.
        """
        if criteria.is_empty():
            raise EmptyCriteria("refusing to run a query with no criteria")
        self._ensure_index()
        found: dict[SignatureKey, ProvNode] = {}
        for row in self.rows:
            self._match_row(row, criteria, found)
        nodes = list(found.values())
        if criteria.dates:
            nodes = self._filter_by_date(nodes, criteria, level)
        return nodes

    def _proc_node(self, host: str, pid: int) -> ProvNode | None:
        info = self.index.procs.get(pid)
        if info is None or not info.materialized:
            return None
        sig = SignatureKey(host, NodeKind.PROCESS, str(pid), info.epoch)
        title = info.title or f"pid {pid}"
        attrs = {"pid": str(pid)}
        if not info.title:
            attrs["synthetic_title"] = "true"
        return ProvNode(sig, title, attrs)

    def _match_row(self, row: FlatJournalRow, criteria: NodeCriteria,
                   found: dict[SignatureKey, ProvNode]) -> None:
        kind = criteria.kind

        def attr_ok(node: ProvNode) -> bool:
            for name, op, value in criteria.attrs:
                attr = node.attrs.get(name)
                if attr is None:
                    return False
                if op == "is" and attr != value:
                    return False
                if op == "has" and not title_matches("has", value, attr):
                    return False
            return True

        def consider(node: ProvNode | None) -> None:
            if node is None or node.sig in found:
                return
            if kind is not None and node.sig.kind is not kind:
                return
            for op, value in criteria.titles:
                if not title_matches(op, value, node.title):
                    return
            if criteria.file_titles:
                if node.sig.kind is not NodeKind.FILE:
                    return
                for op, value in criteria.file_titles:
                    if not title_matches(op, value, node.title):
                        return
            if not attr_ok(node):
                return
            found[node.sig] = node

        if row.pid is not None and kind in (None, NodeKind.PROCESS):
            consider(self._proc_node(row.host, row.pid))
            if row.ppid is not None:
                consider(self._proc_node(row.host, row.ppid))
            if row.ancestor_pid is not None:
                consider(self._proc_node(row.host, row.ancestor_pid))
            if row.syscall in _FORK_SYSCALLS:
                child = _fork_child(row)
                if child is not None:
                    consider(self._proc_node(row.host, child))
        if row.pid is not None and row.syscall not in _FORK_SYSCALLS:
            tid_str = str(row.tid) if row.tid is not None else f"{row.pid}.t0"
            if kind in (None, NodeKind.THREAD):
                epoch = self.index.thread_epoch(row.pid, tid_str) or row.ts
                consider(ProvNode(
                    SignatureKey(row.host, NodeKind.THREAD, tid_str, epoch),
                    tid_str, {"pid": str(row.pid), "tid": tid_str}))
            if kind in (None, NodeKind.UNIT):
                unit_id = row.unit_id or "u0"
                epoch = self.index.unit_epoch(tid_str, unit_id) or row.ts
                local = f"{tid_str}.{unit_id}"
                consider(ProvNode(
                    SignatureKey(row.host, NodeKind.UNIT, local, epoch),
                    local, {"pid": str(row.pid), "tid": tid_str, "unit": local}))
        if row.fd_title and (criteria.file_titles
                             or kind in (None, NodeKind.FILE, NodeKind.SOCKET,
                                         NodeKind.PIPE)):
            rec = row.to_record()
            if rec.resource is not None:
                node = ProvNode(rec.resource.signature(row.host),
                                rec.resource.title(), {})
                if row.fd_inode:
                    node.attrs["inode"] = row.fd_inode
                consider(node)

    def _filter_by_date(self, nodes: list[ProvNode], criteria: NodeCriteria,
                        level: CompressionLevel) -> list[ProvNode]:
        """Re-check the date predicate against level-collapsed incident edges,
        mirroring the in-memory rule exactly."""
        sigs = {n.sig for n in nodes}
        cursor = self.cursor()
        graphs = self.expand(sigs, cursor)
        incident: dict[SignatureKey, dict[EdgeKey, tuple[list[int], int]]] = {}
        for lg in graphs:
            for edge in lg.edges:
                for end in (edge.src, edge.dst):
                    if end not in sigs:
                        continue
                    bucket = incident.setdefault(end, {})
                    ts_list, count = bucket.get(edge.key(), ([], 0))
                    bucket[edge.key()] = (ts_list + edge.timestamps,
                                          count + edge.count)
        keep = []
        for node in nodes:
            ok = True
            for op, value in criteria.dates:
                matched = False
                for key, (ts_list, count) in incident.get(node.sig, {}).items():
                    if criteria.edge_filter and key[2] != criteria.edge_filter:
                        continue
                    collapsed, _ = collapse_timestamps(ts_list, count, level)
                    if any(ts_matches(op, value, t) for t in collapsed):
                        matched = True
                        break
                if not matched:
                    ok = False
                    break
            if ok:
                keep.append(node)
        return keep

    # -- layer expansion -------------------------------------------------------------

    def expand(self, frontier: Iterable[SignatureKey], cursor: ReplayCursor,
               direction: str | None = None,
               edge_filter: str | None = None) -> list[LineGraph]:
        """One batched pass: every not-yet-delivered row incident to any
        frontier member, replayed into line graphs.

        ``direction`` and ``edge_filter`` describe the traversal being
        served. They are accepted as load-shaping hints but rows are not
        pre-filtered on them: a row whose syscall the filter would drop
        still carries the hierarchy levels the traversal needs, and the
        engine applies admission per edge anyway.
        """
        self._ensure_index()
        offsets: set[int] = set()
        for sig in frontier:
            offsets.update(self._sig_rows.get(sig, ()))
        offsets -= cursor.seen
        out = []
        for offset in sorted(offsets):
            row = self.rows[offset]
            cursor.seen.add(offset)
            rec = row.to_record()
            if rec.pid is None and rec.resource is None:
                continue
            out.append(build_line_graph(rec, cursor.state_for(row.host)))
        return out


# -- two-table snapshot ---------------------------------------------------------


@dataclass
class SnapshotReport:
    vertices: int = 0
    edges: int = 0


def _sig_cells(sig: SignatureKey) -> list[str]:
    return [sig.host, sig.kind.value, sig.local_id, str(sig.epoch)]


def _sig_from_cells(cells: list[str]) -> SignatureKey:
    return SignatureKey(cells[0], NodeKind(cells[1]), cells[2], int(cells[3]))


def snapshot_two_table(store: GraphStore, out_dir: str | os.PathLike) -> SnapshotReport:
    """Write vertices.tsv and edges.tsv for the store's current contents.

    Rows are sorted, so identical stores produce byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = SnapshotReport()

    vrows = []
    for node in store.all_nodes():
        cells = _sig_cells(node.sig) + [node.title, attrs_to_field(node.attrs)]
        vrows.append("\t".join(esc(c) for c in cells))
    vrows.sort()
    report.vertices = len(vrows)
    with open(out / "vertices.tsv", "w", encoding="utf-8") as fh:
        fh.write("\t".join([FORMAT_TAG] + VERTEX_COLUMNS[1:]) + "\n")
        for row in vrows:
            fh.write(row + "\n")

    erows = []
    for edge in store.all_edges():
        cells = (_sig_cells(edge.src) + _sig_cells(edge.dst)
                 + [edge.rel, str(edge.count),
                    ",".join(str(t) for t in edge.timestamps),
                    attrs_to_field(edge.attrs)])
        erows.append("\t".join(esc(c) for c in cells))
    erows.sort()
    report.edges = len(erows)
    with open(out / "edges.tsv", "w", encoding="utf-8") as fh:
        fh.write("\t".join([FORMAT_TAG] + EDGE_COLUMNS[1:]) + "\n")
        for row in erows:
            fh.write(row + "\n")
    return report


def load_two_table(in_dir: str | os.PathLike) -> tuple[list[ProvNode], list[EventEdge]]:
    src = Path(in_dir)
    nodes, edges = [], []
    with open(src / "vertices.tsv", "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            cells = [unesc(c) for c in line.rstrip("\n").split("\t")]
            if len(cells) != len(VERTEX_COLUMNS):
                raise IoError(f"vertex row has {len(cells)} cells")
            nodes.append(ProvNode(_sig_from_cells(cells[:4]), cells[4],
                                  attrs_from_field(cells[5])))
    with open(src / "edges.tsv", "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            cells = [unesc(c) for c in line.rstrip("\n").split("\t")]
            if len(cells) != len(EDGE_COLUMNS):
                raise IoError(f"edge row has {len(cells)} cells")
            edges.append(EventEdge(
                _sig_from_cells(cells[:4]), _sig_from_cells(cells[4:8]),
                cells[8], [int(t) for t in cells[10].split(",")],
                int(cells[9]), attrs_from_field(cells[11])))
    return nodes, edges


def import_two_table(store: GraphStore, in_dir: str | os.PathLike) -> SnapshotReport:
    """Load a snapshot into a (fresh) store verbatim, without re-folding."""
    nodes, edges = load_two_table(in_dir)
    store.load_direct(nodes, edges)
    return SnapshotReport(vertices=len(nodes), edges=len(edges))

"""Conversion of one event record into its line graph.

The path runs ancestor process -> process -> thread -> execution unit ->
resource, top of the hierarchy first. Missing thread/unit levels are
synthesized as per-process defaults (marked ``synthetic=true``); the
ancestor level appears only when a process is seen for the first time and
a parent is known; the resource level appears only for causal syscalls.
Hierarchy (spawn / unit-of) edges are creation facts: they carry the
child's first-seen time and are emitted once per child.
"""

from __future__ import annotations

from graalf.ingest.records import EventRecord, HostState, ProcEntry
from graalf.model import (
    SPAWN,
    UNIT_OF,
    EventEdge,
    FlowDirection,
    LineGraph,
    NodeKind,
    ProvNode,
    SignatureKey,
    Timestamp,
    flow_direction,
)

_FORK_SYSCALLS = frozenset({"fork", "vfork", "clone"})


class EmptyRecord(ValueError):
    """The record carries neither a pid nor a resource."""


def _process_node(host: str, pid: int, entry: ProcEntry,
                  rec: EventRecord | None = None) -> ProvNode:
    attrs = {"pid": str(pid)}
    if entry.ppid is not None:
        attrs["ppid"] = str(entry.ppid)
    if rec is not None and rec.exe:
        attrs["exe"] = rec.exe
    if not entry.title_observed:
        attrs["synthetic_title"] = "true"
    sig = SignatureKey(host, NodeKind.PROCESS, str(pid), entry.epoch)
    return ProvNode(sig, entry.title, attrs)


def _resource_node(rec: EventRecord) -> ProvNode:
    ref = rec.resource
    attrs: dict[str, str] = {}
    if ref.inode:
        attrs["inode"] = ref.inode
    return ProvNode(ref.signature(rec.host), ref.title(), attrs)


def build_line_graph(rec: EventRecord, state: HostState) -> LineGraph:
    """Turn one event record into its (at most 5-node, 4-edge) path graph."""
    if rec.pid is None:
        if rec.resource is None:
            raise EmptyRecord("record has neither pid nor resource")
        return LineGraph([_resource_node(rec)], [])

    host, ts = rec.host, rec.ts
    nodes: list[ProvNode] = []
    edges: list[EventEdge] = []

    # Ancestor pids are observations too (they fix the epoch a later
    # sighting will reuse) but never contribute nodes beyond the parent.
    if rec.ancestor_pid is not None:
        state.observe_process(rec.ancestor_pid, ts, title=rec.ancestor_name)

    title = rec.comm or (rec.exe.rsplit("/", 1)[-1] if rec.exe else "")
    entry, _ = state.observe_process(rec.pid, ts, title=title, ppid=rec.ppid)
    proc = _process_node(host, rec.pid, entry, rec)

    if rec.ppid is not None and not entry.spawn_emitted:
        p_entry, _ = state.observe_process(rec.ppid, ts, title=rec.ppname)
        parent = _process_node(host, rec.ppid, p_entry)
        nodes.append(parent)
        edges.append(EventEdge(parent.sig, proc.sig, SPAWN, [entry.epoch]))
        entry.spawn_emitted = True
    nodes.append(proc)

    if rec.syscall in _FORK_SYSCALLS:
        child_pid = _child_pid(rec)
        if child_pid is not None:
            c_entry, _ = state.observe_process(child_pid, ts, ppid=rec.pid)
            child = _process_node(host, child_pid, c_entry)
            nodes.append(child)
            if not c_entry.spawn_emitted:
                edges.append(EventEdge(proc.sig, child.sig, SPAWN, [c_entry.epoch]))
                c_entry.spawn_emitted = True
        return LineGraph(nodes, edges)

    tid_str = str(rec.tid) if rec.tid is not None else f"{rec.pid}.t0"
    t_entry, t_new = state.observe_thread(rec.pid, tid_str, ts)
    t_attrs = {"pid": str(rec.pid), "tid": tid_str}
    if rec.tid is None:
        t_attrs["synthetic"] = "true"
    thread = ProvNode(SignatureKey(host, NodeKind.THREAD, tid_str, t_entry.epoch),
                      tid_str, t_attrs)
    nodes.append(thread)
    if t_new:
        edges.append(EventEdge(proc.sig, thread.sig, SPAWN, [t_entry.epoch]))

    unit_id = rec.unit_id or "u0"
    unit_local = f"{tid_str}.{unit_id}"
    u_entry, u_new = state.observe_unit(tid_str, unit_id, ts)
    u_attrs = {"pid": str(rec.pid), "tid": tid_str, "unit": unit_local}
    if rec.unit_id is None:
        u_attrs["synthetic"] = "true"
    unit = ProvNode(SignatureKey(host, NodeKind.UNIT, unit_local, u_entry.epoch),
                    unit_local, u_attrs)
    nodes.append(unit)
    if u_new:
        edges.append(EventEdge(thread.sig, unit.sig, UNIT_OF, [u_entry.epoch]))

    direction = flow_direction(rec.syscall)
    if rec.resource is not None and direction is not FlowDirection.NEUTRAL:
        res = _resource_node(rec)
        nodes.append(res)
        e_attrs: dict[str, str] = {}
        if rec.args:
            e_attrs["args"] = rec.args
        if rec.retval:
            e_attrs["retval"] = rec.retval
        if direction is FlowDirection.INTO_SUBJECT:
            edges.append(EventEdge(res.sig, unit.sig, rec.syscall, [ts], 1, e_attrs))
        else:
            edges.append(EventEdge(unit.sig, res.sig, rec.syscall, [ts], 1, e_attrs))

    return LineGraph(nodes, edges)


def _child_pid(rec: EventRecord) -> int | None:
    if not rec.retval:
        return None
    try:
        pid = int(rec.retval)
    except ValueError:
        return None
    return pid if pid > 0 else None


def syscall_timestamp(lg: LineGraph) -> Timestamp | None:
    """The event time of the resource edge, if the line graph has one."""
    for edge in lg.edges:
        if not edge.rel.startswith("@"):
            return edge.timestamps[0]
    return None

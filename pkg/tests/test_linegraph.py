import pytest

from graalf.ingest.linegraph import EmptyRecord, build_line_graph
from graalf.ingest.records import HostState
from graalf.model import SPAWN, UNIT_OF, NodeKind

from tests.conftest import rec


def shape(lg):
    return ([(n.sig.kind, n.sig.local_id) for n in lg.nodes],
            [(e.src.local_id, e.rel, e.dst.local_id) for e in lg.edges])


class TestBasicShapes:
    def test_first_read_is_full_form(self):
        """First sight of a process with a parent: 5 nodes, 4 edges, and the
        read edge points file -> unit."""
        state = HostState("h1")
        lg = build_line_graph(
            rec(ts=5, syscall="read", pid=49025, ppid=48000, comm="vsftpd",
                path="/etc/password", inode="18957"), state)
        nodes, edges = shape(lg)
        assert nodes == [
            (NodeKind.PROCESS, "48000"),
            (NodeKind.PROCESS, "49025"),
            (NodeKind.THREAD, "49025.t0"),
            (NodeKind.UNIT, "49025.t0.u0"),
            (NodeKind.FILE, "18957:/etc/password"),
        ]
        assert edges == [
            ("48000", SPAWN, "49025"),
            ("49025", SPAWN, "49025.t0"),
            ("49025.t0", UNIT_OF, "49025.t0.u0"),
            ("18957:/etc/password", "read", "49025.t0.u0"),
        ]

    def test_without_parent_four_nodes(self):
        state = HostState("h1")
        lg = build_line_graph(
            rec(ts=5, syscall="read", pid=49025, comm="vsftpd",
                path="/etc/password"), state)
        assert len(lg.nodes) == 4
        assert len(lg.edges) == 3

    def test_repeat_event_emits_only_syscall_edge(self):
        state = HostState("h1")
        build_line_graph(rec(ts=5, syscall="read", pid=1, comm="a", path="/f"),
                         state)
        again = build_line_graph(
            rec(ts=6, syscall="read", pid=1, comm="a", path="/f"), state)
        _, edges = shape(again)
        assert edges == [("/f", "read", "1.t0.u0")]

    def test_explicit_thread_and_unit(self):
        """Thread and unit ids from enriched logs place the syscall edge on
        the named unit."""
        state = HostState("h1")
        lg = build_line_graph(
            rec(ts=9, syscall="read", pid=13275, tid=13278, unit_id="u1",
                comm="firefox", path="/tmp/H345"), state)
        nodes, edges = shape(lg)
        assert (NodeKind.THREAD, "13278") in nodes
        assert (NodeKind.UNIT, "13278.u1") in nodes
        assert ("13278", UNIT_OF, "13278.u1") in edges
        synthetic = [n for n in lg.nodes if n.attrs.get("synthetic") == "true"]
        assert synthetic == []

    def test_two_threads_two_units(self):
        state = HostState("h1")
        build_line_graph(rec(ts=1, syscall="read", pid=13275, tid=13278,
                             unit_id="u1", comm="firefox", path="/a"), state)
        lg = build_line_graph(rec(ts=2, syscall="read", pid=13275, tid=13280,
                                  unit_id="u1", comm="firefox", path="/b"), state)
        _, edges = shape(lg)
        assert ("13275", SPAWN, "13280") in edges
        assert ("13280", UNIT_OF, "13280.u1") in edges

    def test_resource_only_record(self):
        lg = build_line_graph(rec(ts=1, syscall="read", path="/x"),
                              HostState("h1"))
        assert len(lg.nodes) == 1
        assert lg.edges == []

    def test_neither_pid_nor_resource_raises(self):
        with pytest.raises(EmptyRecord):
            build_line_graph(rec(ts=1, syscall="read"), HostState("h1"))


class TestOrientation:
    def test_write_points_unit_to_resource(self):
        lg = build_line_graph(
            rec(ts=2, syscall="write", pid=1, comm="x", endpoint="1.2.3.4:80"),
            HostState("h1"))
        syscall_edges = [e for e in lg.edges if e.rel == "write"]
        assert syscall_edges[0].src.kind is NodeKind.UNIT
        assert syscall_edges[0].dst.kind is NodeKind.SOCKET

    def test_neutral_syscall_has_no_resource_edge(self):
        lg = build_line_graph(
            rec(ts=2, syscall="open", pid=1, comm="x", path="/f"),
            HostState("h1"))
        assert all(e.rel in (SPAWN, UNIT_OF) for e in lg.edges)
        assert all(n.sig.kind is not NodeKind.FILE for n in lg.nodes)

    def test_unknown_syscall_treated_neutral(self):
        lg = build_line_graph(
            rec(ts=2, syscall="mystery", pid=1, comm="x", path="/f"),
            HostState("h1"))
        assert all(e.rel in (SPAWN, UNIT_OF) for e in lg.edges)


class TestCreation:
    def test_fork_spawns_child(self):
        state = HostState("h1")
        lg = build_line_graph(
            rec(ts=3, syscall="fork", pid=100, comm="bash", retval="101"),
            state)
        nodes, edges = shape(lg)
        assert (NodeKind.PROCESS, "101") in nodes
        assert ("100", SPAWN, "101") in edges
        # the child's own first record no longer re-attributes the parent
        child = build_line_graph(
            rec(ts=4, syscall="read", pid=101, ppid=100, comm="ls", path="/f"),
            state)
        _, child_edges = shape(child)
        assert ("100", SPAWN, "101") not in child_edges

    def test_child_epoch_is_fork_time(self):
        state = HostState("h1")
        build_line_graph(rec(ts=3, syscall="fork", pid=100, comm="bash",
                             retval="101"), state)
        lg = build_line_graph(rec(ts=9, syscall="read", pid=101, comm="ls",
                                  path="/f"), state)
        child = [n for n in lg.nodes if n.sig.local_id == "101"][0]
        assert child.sig.epoch == 3

    def test_second_parent_claim_ignored(self):
        state = HostState("h1")
        build_line_graph(rec(ts=3, syscall="fork", pid=100, comm="bash",
                             retval="101"), state)
        lg = build_line_graph(rec(ts=5, syscall="fork", pid=200, comm="zsh",
                                  retval="101"), state)
        _, edges = shape(lg)
        assert ("200", SPAWN, "101") not in edges


class TestStateBookkeeping:
    def test_ancestor_pid_observed_but_not_drawn(self):
        state = HostState("h1")
        lg = build_line_graph(
            rec(ts=4, syscall="read", pid=10, ppid=9, ancestor_pid=1,
                ancestor_name="init", comm="x", path="/f"), state)
        nodes, _ = shape(lg)
        assert (NodeKind.PROCESS, "1") not in nodes
        assert state.proc_table[1].epoch == 4
        assert state.proc_table[1].title == "init"

    def test_placeholder_parent_title(self):
        state = HostState("h1")
        lg = build_line_graph(
            rec(ts=4, syscall="read", pid=10, ppid=9, comm="x", path="/f"),
            state)
        parent = [n for n in lg.nodes if n.sig.local_id == "9"][0]
        assert parent.title == "pid 9"
        assert parent.attrs.get("synthetic_title") == "true"


class TestShapeInvariant:
    def test_bounds_and_adjacency(self):
        """Every emitted graph stays within 5 nodes / 4 edges and each edge
        connects consecutive listed levels."""
        import random
        rng = random.Random(5)
        state = HostState("h1")
        order = {NodeKind.PROCESS: 1, NodeKind.THREAD: 2, NodeKind.UNIT: 3,
                 NodeKind.FILE: 4, NodeKind.SOCKET: 4, NodeKind.PIPE: 4}
        for i in range(500):
            r = rec(ts=i, syscall=rng.choice(["read", "write", "open", "fork"]),
                    pid=rng.randint(1, 8),
                    ppid=rng.choice([None, rng.randint(1, 8)]),
                    tid=rng.choice([None, rng.randint(100, 104)]),
                    comm=f"p{rng.randint(1, 8)}",
                    path=rng.choice([None, f"/f{rng.randint(0, 9)}"]),
                    retval=str(rng.randint(50, 60)))
            lg = build_line_graph(r, state)
            assert 1 <= len(lg.nodes) <= 5
            assert len(lg.edges) <= 4
            index = {n.sig: i for i, n in enumerate(lg.nodes)}
            levels = [order[n.sig.kind] for n in lg.nodes]
            assert levels == sorted(levels)
            for e in lg.edges:
                assert e.src in index and e.dst in index

    def test_order_preserved_per_pid(self):
        """Edge timestamps non-decreasing per (host, pid) for in-order input."""
        state = HostState("h1")
        seen: dict[int, int] = {}
        for i in range(200):
            pid = i % 3 + 1
            lg = build_line_graph(
                rec(ts=i, syscall="write", pid=pid, comm=f"p{pid}", path="/f"),
                state)
            for e in lg.edges:
                if e.rel == "write":
                    assert seen.get(pid, -1) <= e.timestamps[0]
                    seen[pid] = e.timestamps[0]

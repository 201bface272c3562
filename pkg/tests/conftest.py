import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from graalf.ingest.linegraph import build_line_graph
from graalf.ingest.records import EventRecord, HostState, ResourceRef
from graalf.model import CompressionLevel, NodeKind
from graalf.store import GraphStore, StoreConfig


def rec(host="h1", ts=0, syscall="read", pid=None, ppid=None, comm="",
        ppname="", tid=None, unit_id=None, path=None, inode=None,
        endpoint=None, retval=None, ancestor_pid=None, ancestor_name=""):
    """Terse EventRecord builder for tests."""
    resource = None
    if path is not None:
        resource = ResourceRef(NodeKind.FILE, path, inode)
    elif endpoint is not None:
        resource = ResourceRef(NodeKind.SOCKET, endpoint)
    return EventRecord(host=host, ts=ts, syscall=syscall, pid=pid, ppid=ppid,
                       comm=comm, ppname=ppname, tid=tid, unit_id=unit_id,
                       resource=resource, retval=retval,
                       ancestor_pid=ancestor_pid, ancestor_name=ancestor_name)


def feed(store: GraphStore, records, host="h1", state=None, backend=None):
    """Push records through build_line_graph into a store."""
    state = state or HostState(host)
    for r in records:
        if backend is not None:
            backend.append_record(r)
        store.insert_line_graph(build_line_graph(r, state))
    if backend is not None:
        backend.flush()
    return state


@pytest.fixture
def store_c1():
    return GraphStore(StoreConfig(level=CompressionLevel.C1))


@pytest.fixture
def make_store():
    def factory(level=CompressionLevel.C1, **kwargs):
        return GraphStore(StoreConfig(level=level, **kwargs))
    return factory

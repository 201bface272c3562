"""Streaming provenance-graph forensics engine.

Ingests heterogeneous system-call logs into a compressed causal graph and
answers interactive select / back select / forward select queries for
attack investigation and continuous monitoring.
"""

from graalf.model import (
    CompressionLevel,
    EventEdge,
    FlowDirection,
    ForensicGraph,
    LineGraph,
    NodeKind,
    ProvNode,
    SignatureKey,
    flow_direction,
    merge_graphs,
    node_signature,
)
from graalf.store import GraphStore, NodeCriteria, StoreConfig, merge_edge

__version__ = "0.1.0"

__all__ = [
    "CompressionLevel",
    "EventEdge",
    "FlowDirection",
    "ForensicGraph",
    "GraphStore",
    "LineGraph",
    "NodeCriteria",
    "NodeKind",
    "ProvNode",
    "SignatureKey",
    "StoreConfig",
    "__version__",
    "flow_direction",
    "merge_edge",
    "merge_graphs",
    "node_signature",
]

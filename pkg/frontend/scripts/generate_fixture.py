#!/usr/bin/env python3
"""Record the maldrop investigation replay as a UI test fixture.

Runs the five maldrop queries through the engine's HTTP-equivalent wire
format (per-query responses plus the cumulative session graph) and dumps
them with the engine's step colors, so the browser console's view model
can be checked byte-for-byte against the engine.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2]))
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))

from graalf.model import CompressionLevel
from graalf.query.engine import QueryEngine
from graalf.query.render import graph_to_json, step_color
from graalf.service.session import Session

from tests.corpus import CORPUS_QUERIES, build_corpus_store

MALDROP_QUERIES = CORPUS_QUERIES[:5]


def main() -> None:
    store = build_corpus_store(CompressionLevel.C1)
    engine = QueryEngine(store)
    session = Session("fixture")

    queries = []
    for text in MALDROP_QUERIES:
        result = engine.run(text, session)
        queries.append({
            "text": text,
            "response": {
                "step": result.step,
                "stats": result.stats.as_dict(),
                "graph": graph_to_json(result.graph),
            },
        })

    session_graph = graph_to_json(session.graph)
    engine_colors = {node["sig"]: step_color(node["step"])
                     for node in session_graph["nodes"]}

    fixture = {
        "queries": queries,
        "session_graph": session_graph,
        "engine_colors": engine_colors,
    }
    out = Path(__file__).resolve().parents[1] / "fixtures" / "maldrop.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(fixture, indent=2) + "\n")
    print(f"wrote {out} ({len(session_graph['nodes'])} nodes, "
          f"{len(session_graph['edges'])} edges, "
          f"{len(queries)} query responses)")


if __name__ == "__main__":
    main()

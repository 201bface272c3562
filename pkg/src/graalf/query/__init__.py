from graalf.query.language import (
    Condition,
    ConfigCommand,
    QueryAst,
    QuerySyntaxError,
    parse_query,
    pretty_print,
    validate_ast,
)
from graalf.query.engine import QueryEngine, QueryResult, QueryStats, temporal_admit
from graalf.query.render import (
    graph_from_json,
    graph_to_json,
    render_graph,
    step_color,
    to_dot,
)

__all__ = [
    "Condition",
    "ConfigCommand",
    "QueryAst",
    "QueryEngine",
    "QueryResult",
    "QueryStats",
    "QuerySyntaxError",
    "graph_from_json",
    "graph_to_json",
    "parse_query",
    "pretty_print",
    "render_graph",
    "step_color",
    "temporal_admit",
    "to_dot",
    "validate_ast",
]

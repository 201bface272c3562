import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graalf.model import NodeKind
from graalf.query.language import (
    Condition,
    ConfigCommand,
    EmptyCriteriaError,
    QueryAst,
    QuerySyntaxError,
    parse_query,
    pretty_print,
    validate_ast,
)

# The 13 case-study queries, verbatim (including the two typo artifacts in
# the monitoring pair: an interior space and a hyphenated path).
PAPER_QUERIES = [
    "back select * from soc where name has 128.55.12.167:4343",
    "back select * from * where name is /dropbearLinux/dropbear;",
    "forward select * from * where name is tar and pid is 13899;",
    "back select * from * where name is dropbearLINUX.tar;",
    "forward select * from * where name is scp and pid is 13870;",
    "select * from file where name has /important-files/",
    "back select * from * where name is /important-files/plan-file.cad;",
    "forward select * from soc where name is scp and pid is 4667;",
    "select * from * where name is myshell.sh",
    "back select * from * where name is myshell.sh;",
    "forward select * from * where pid is 24456 and name is sh;",
    "back select write from * where file name has /home /user1/Downloads/ and date has 2019-09-03",
    "forward select * from * where name is /home/user1/Down-loads/dash",
]


class TestPaperCorpus:
    @pytest.mark.parametrize("text", PAPER_QUERIES)
    def test_parses(self, text):
        ast = parse_query(text)
        assert isinstance(ast, QueryAst)
        validate_ast(ast)

    @pytest.mark.parametrize("text", PAPER_QUERIES)
    def test_round_trip(self, text):
        ast = parse_query(text)
        assert parse_query(pretty_print(ast)) == ast

    def test_exfil_socket_query_shape(self):
        ast = parse_query("back select * from soc where name has 128.55.12.167:4343")
        assert ast.direction == "back"
        assert ast.edge_filter is None
        assert ast.node_kind is NodeKind.SOCKET
        assert ast.conditions == [Condition("name", "has", "128.55.12.167:4343")]

    def test_monitoring_query_shape(self):
        ast = parse_query(
            "back select write from * where file name has "
            "/home/user1/Downloads/ and date has 2019-09-03")
        assert ast.direction == "back"
        assert ast.edge_filter == "write"
        assert ast.node_kind is None
        assert ast.conditions == [
            Condition("file_name", "has", "/home/user1/Downloads/"),
            Condition("date", "has", "2019-09-03"),
        ]

    def test_interior_space_stays_in_value(self):
        ast = parse_query(PAPER_QUERIES[11])
        assert ast.conditions[0] == Condition("file_name", "has",
                                              "/home /user1/Downloads/")

    def test_multi_condition(self):
        ast = parse_query("forward select * from * where name is tar and pid is 13899")
        assert ast.conditions == [Condition("name", "is", "tar"),
                                  Condition("pid", "is", "13899")]


class TestGrammar:
    def test_keywords_case_insensitive_values_not(self):
        ast = parse_query("BACK SELECT * FROM SOC WHERE NAME HAS MiXeD")
        assert ast.direction == "back"
        assert ast.node_kind is NodeKind.SOCKET
        assert ast.conditions[0].value == "MiXeD"

    def test_socket_alias(self):
        assert parse_query("select * from socket where name has x").node_kind \
            is NodeKind.SOCKET

    def test_trailing_semicolon_optional(self):
        with_semi = parse_query("select * from file where name is x;")
        without = parse_query("select * from file where name is x")
        assert with_semi == without

    def test_syscall_edge_lowercased(self):
        assert parse_query("back select WRITE from * where name is x").edge_filter \
            == "write"

    def test_generic_attr_condition(self):
        ast = parse_query("select * from process where uid is 0")
        assert ast.conditions == [Condition("uid", "is", "0")]

    def test_value_runs_to_end(self):
        ast = parse_query("select * from file where name has a b c")
        assert ast.conditions[0].value == "a b c"

    def test_select_from_where_fails_at_second_token(self):
        with pytest.raises(QuerySyntaxError) as err:
            parse_query("select from where")
        assert err.value.position == len("select ")

    def test_missing_value(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("select * from file where name is")

    def test_missing_op(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("select * from file where name /tmp")

    def test_unknown_kind(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("select * from directory where name is x")

    def test_empty_input(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("")

    def test_error_carries_expected_tokens(self):
        with pytest.raises(QuerySyntaxError) as err:
            parse_query("select * of file")
        assert "from" in err.value.expected


class TestNoCriteriaRule:
    def test_bare_wildcard_rejected(self):
        with pytest.raises(EmptyCriteriaError):
            validate_ast(parse_query("select * from *"))

    def test_kind_alone_rejected(self):
        with pytest.raises(EmptyCriteriaError):
            validate_ast(parse_query("select * from process"))

    def test_any_condition_passes(self):
        validate_ast(parse_query("select * from file where name has x"))
        validate_ast(parse_query("back select * from * where pid is 1"))


class TestConfigCommands:
    def test_set_compression(self):
        assert parse_query("set compression c2") == ConfigCommand("compression", "c2")

    def test_set_mode(self):
        assert parse_query("set mode verbose") == ConfigCommand("mode", "verbose")

    def test_limit_depth(self):
        assert parse_query("limit depth 4") == ConfigCommand("depth", "4")

    def test_memory_limit_and_threshold(self):
        assert parse_query("set memory_limit 1000000").value == "1000000"
        assert parse_query("set evict_threshold 0.8").value == "0.8"

    @pytest.mark.parametrize("bad", [
        "set compression c9",
        "set mode loud",
        "set memory_limit -3",
        "set evict_threshold 1.5",
        "limit depth zero",
        "set unknown_key 1",
    ])
    def test_bad_values_rejected(self, bad):
        with pytest.raises(QuerySyntaxError):
            parse_query(bad)

    def test_config_round_trip(self):
        for text in ("set compression c2", "limit depth 4"):
            assert parse_query(pretty_print(parse_query(text))) == parse_query(text)


@settings(max_examples=500, deadline=None)
@given(st.text(max_size=80))
def test_parse_total_on_arbitrary_text(text):
    try:
        parse_query(text)
    except QuerySyntaxError:
        pass

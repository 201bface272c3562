"""The forensic query language.

Grammar::

    statement  := config | query
    config     := 'set' KEY VALUE | 'limit' 'depth' INT
    query      := [ 'back' | 'forward' ] 'select' edge 'from' kind
                  [ 'where' cond ( 'and' cond )* ] [ ';' ]
    edge       := '*' | SYSCALL-WORD
    kind       := '*' | 'file' | 'soc' | 'socket' | 'process'
                | 'thread' | 'unit' | 'pipe'
    cond       := field ( 'is' | 'has' ) VALUE
    field      := 'name' | 'file' 'name' | 'pid' | 'date' | ATTR-WORD

Keywords are ASCII case-insensitive; values are case-sensitive and run
verbatim (spaces included) up to the next standalone ``and``, a ``;``, or
the end of input. ``is`` compares exactly; ``has`` matches a substring,
or a regular expression when the value is ``/``-delimited.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from graalf.model import NodeKind

KIND_KEYWORDS = {
    "file": NodeKind.FILE,
    "soc": NodeKind.SOCKET,
    "socket": NodeKind.SOCKET,
    "process": NodeKind.PROCESS,
    "thread": NodeKind.THREAD,
    "unit": NodeKind.UNIT,
    "pipe": NodeKind.PIPE,
}

KIND_NAMES = {
    NodeKind.FILE: "file",
    NodeKind.SOCKET: "soc",
    NodeKind.PROCESS: "process",
    NodeKind.THREAD: "thread",
    NodeKind.UNIT: "unit",
    NodeKind.PIPE: "pipe",
}

_RESERVED = frozenset({
    "select", "back", "forward", "from", "where", "and", "is", "has", ";",
})

CONFIG_KEYS = ("compression", "mode", "memory_limit", "evict_threshold", "depth")


@dataclass
class Condition:
    field: str  # "name" | "file_name" | "pid" | "date" | arbitrary attr name
    op: str     # "is" | "has"
    value: str


@dataclass
class QueryAst:
    direction: str | None = None          # None | "back" | "forward"
    edge_filter: str | None = None        # None is the * wildcard
    node_kind: NodeKind | None = None     # None is the * wildcard
    conditions: list[Condition] = field(default_factory=list)


@dataclass
class ConfigCommand:
    key: str
    value: str


class QuerySyntaxError(ValueError):
    """Parse failure with position and the token set that was expected."""

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = expected
        suffix = f" (expected {' | '.join(expected)})" if expected else ""
        super().__init__(f"{message} at position {position}{suffix}")


class EmptyCriteriaError(ValueError):
    """The query has no criteria; its output would be partial, so it is refused."""


_TOKEN = re.compile(r";|[^\s;]+")


@dataclass
class _Token:
    text: str
    start: int

    @property
    def lower(self) -> str:
        return self.text.lower()


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = [_Token(m.group(), m.start()) for m in _TOKEN.finditer(text)]
        self.pos = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise QuerySyntaxError("unexpected end of query", len(self.text))
        self.pos += 1
        return tok

    def expect_word(self, *expected: str) -> _Token:
        tok = self.peek()
        if tok is None:
            raise QuerySyntaxError("unexpected end of query", len(self.text), expected)
        if tok.lower not in expected:
            raise QuerySyntaxError(f"unexpected token {tok.text!r}", tok.start, expected)
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        while self.peek() is not None and self.peek().text == ";":
            self.pos += 1
        return self.peek() is None

    # -- statements -------------------------------------------------------------

    def statement(self) -> QueryAst | ConfigCommand:
        tok = self.peek()
        if tok is None:
            raise QuerySyntaxError("empty statement", 0,
                                   ("select", "back", "forward", "set", "limit"))
        if tok.lower == "set":
            return self.config()
        if tok.lower == "limit":
            return self.depth_limit()
        return self.query()

    def config(self) -> ConfigCommand:
        self.expect_word("set")
        key_tok = self.take()
        key = key_tok.lower
        if key not in CONFIG_KEYS:
            raise QuerySyntaxError(f"unknown setting {key_tok.text!r}",
                                   key_tok.start, CONFIG_KEYS)
        value_tok = self.take()
        cmd = ConfigCommand(key, value_tok.text)
        _validate_config(cmd, value_tok.start)
        if not self.at_end():
            extra = self.peek()
            raise QuerySyntaxError(f"trailing input {extra.text!r}", extra.start)
        return cmd

    def depth_limit(self) -> ConfigCommand:
        self.expect_word("limit")
        self.expect_word("depth")
        value_tok = self.take()
        cmd = ConfigCommand("depth", value_tok.text)
        _validate_config(cmd, value_tok.start)
        if not self.at_end():
            extra = self.peek()
            raise QuerySyntaxError(f"trailing input {extra.text!r}", extra.start)
        return cmd

    def query(self) -> QueryAst:
        ast = QueryAst()
        tok = self.peek()
        if tok is not None and tok.lower in ("back", "forward"):
            ast.direction = tok.lower
            self.pos += 1
        self.expect_word("select")

        edge_tok = self.take()
        if edge_tok.lower in _RESERVED:
            raise QuerySyntaxError(f"unexpected token {edge_tok.text!r}",
                                   edge_tok.start, ("*", "<syscall>"))
        if edge_tok.text != "*":
            ast.edge_filter = edge_tok.lower

        self.expect_word("from")
        kind_tok = self.take()
        if kind_tok.text != "*":
            kind = KIND_KEYWORDS.get(kind_tok.lower)
            if kind is None:
                raise QuerySyntaxError(
                    f"unknown kind {kind_tok.text!r}", kind_tok.start,
                    ("*",) + tuple(KIND_KEYWORDS))
            ast.node_kind = kind

        tok = self.peek()
        if tok is not None and tok.lower == "where":
            self.pos += 1
            ast.conditions.append(self.condition())
            while True:
                tok = self.peek()
                if tok is None or tok.lower != "and":
                    break
                self.pos += 1
                ast.conditions.append(self.condition())

        if not self.at_end():
            extra = self.peek()
            raise QuerySyntaxError(f"trailing input {extra.text!r}", extra.start,
                                   ("and", ";"))
        return ast

    def condition(self) -> Condition:
        field_tok = self.take()
        if field_tok.lower in _RESERVED or field_tok.text in ("*", ";"):
            raise QuerySyntaxError(f"unexpected token {field_tok.text!r}",
                                   field_tok.start,
                                   ("name", "file name", "pid", "date", "<attr>"))
        field_name = field_tok.lower
        if field_name == "file":
            nxt = self.peek()
            if nxt is not None and nxt.lower == "name":
                self.pos += 1
                field_name = "file_name"
        op_tok = self.expect_word("is", "has")
        value, value_start = self.value()
        if not value:
            raise QuerySyntaxError("empty condition value", value_start, ("<value>",))
        return Condition(field_name, op_tok.lower, value)

    def value(self) -> tuple[str, int]:
        """Consume tokens verbatim until a standalone `and`, `;`, or the end."""
        tok = self.peek()
        start = tok.start if tok is not None else len(self.text)
        end = start
        while True:
            tok = self.peek()
            if tok is None or tok.lower == "and" or tok.text == ";":
                break
            end = tok.start + len(tok.text)
            self.pos += 1
        return self.text[start:end], start


def _validate_config(cmd: ConfigCommand, position: int) -> None:
    value = cmd.value
    ok = True
    if cmd.key == "compression":
        ok = value.lower() in ("c0", "c1", "c2", "c3")
    elif cmd.key == "mode":
        ok = value.lower() in ("normal", "verbose")
    elif cmd.key in ("memory_limit", "depth"):
        ok = value.isdigit() and int(value) > 0
    elif cmd.key == "evict_threshold":
        try:
            ok = 0 < float(value) <= 1
        except ValueError:
            ok = False
    if not ok:
        raise QuerySyntaxError(f"bad value {value!r} for {cmd.key}", position)


def parse_query(text: str) -> QueryAst | ConfigCommand:
    """Parse one statement; raises QuerySyntaxError on malformed input."""
    return _Parser(text).statement()


def validate_ast(ast: QueryAst) -> None:
    """Refuse criteria-less queries (wildcard scans flood the output)."""
    if not ast.conditions:
        raise EmptyCriteriaError(
            "query has no criteria; the output would be partial and cannot "
            "be trusted, so it is not run")


def pretty_print(ast: QueryAst | ConfigCommand) -> str:
    if isinstance(ast, ConfigCommand):
        if ast.key == "depth":
            return f"limit depth {ast.value}"
        return f"set {ast.key} {ast.value}"
    parts = []
    if ast.direction:
        parts.append(ast.direction)
    parts.append("select")
    parts.append(ast.edge_filter or "*")
    parts.append("from")
    parts.append(KIND_NAMES[ast.node_kind] if ast.node_kind else "*")
    if ast.conditions:
        parts.append("where")
        rendered = []
        for cond in ast.conditions:
            fname = "file name" if cond.field == "file_name" else cond.field
            rendered.append(f"{fname} {cond.op} {cond.value}")
        parts.append(" and ".join(rendered))
    return " ".join(parts)

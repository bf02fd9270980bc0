"""SPARQL-subset query parser and canonical printer.

Grammar (case-insensitive keywords):

    query      := prefix* 'SELECT' ('*' | var+) 'WHERE' group
    prefix     := 'PREFIX' PNAME_NS IRIREF
    group      := '{' element+ '}'
    element    := triple '.'?                   (final dot optional)
                | 'OPTIONAL' group
                | 'FILTER' '(' raw ')'
                | 'VALUES' datablock
                | group 'UNION' group
    datablock  := var '{' const* '}'
                | '(' var* ')' '{' ( '(' const* ')' )* '}'

Successive elements of a group conjoin left-deep in source order.  FILTER
conditions are kept as raw source text; the engine never interprets them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .expression import (
    And,
    DataBlock,
    Expression,
    Filter,
    Optional,
    Select,
    Union,
    Values,
    bgp_patterns,
)
from .rdf import Term, TriplePattern, literal, uri, variable


class QuerySyntaxError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    value: str
    line: int
    column: int
    offset: int


_KEYWORDS = {"PREFIX", "SELECT", "WHERE", "OPTIONAL", "FILTER", "UNION", "VALUES"}

_VAR_RE = re.compile(r"\?[A-Za-z_][A-Za-z0-9_]*")
_IRI_RE = re.compile(r"<([^<>\s]*)>")
_PNAME_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_-]*)?:([A-Za-z_][A-Za-z0-9_.\-]*)?")
_STRING_RE = re.compile(r"\"((?:[^\"\\]|\\.)*)\"")
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OP_RE = re.compile(r"[!=<>&|+\-*/%,;0-9]+")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def here(kind: str, value: str) -> _Token:
        return _Token(kind, value, line, col, i)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "{}().*":
            tokens.append(here(ch, ch))
            i += 1
            col += 1
            continue
        if ch == "?":
            m = _VAR_RE.match(text, i)
            if m is None:
                raise QuerySyntaxError("malformed variable", line, col)
            tokens.append(here("VAR", m.group(0)))
            col += m.end() - i
            i = m.end()
            continue
        if ch == "<":
            m = _IRI_RE.match(text, i)
            if m is not None:
                tokens.append(here("IRI", m.group(1)))
                col += m.end() - i
                i = m.end()
                continue
            # a bare '<' is an operator inside FILTER conditions
        if ch == '"':
            m = _STRING_RE.match(text, i)
            if m is None:
                raise QuerySyntaxError("unterminated string literal", line, col)
            tokens.append(here("STRING", m.group(1)))
            col += m.end() - i
            i = m.end()
            continue
        word = _WORD_RE.match(text, i)
        if word is not None and word.group(0).upper() in _KEYWORDS and text[word.end() : word.end() + 1] != ":":
            tokens.append(here("KW", word.group(0).upper()))
            col += word.end() - i
            i = word.end()
            continue
        m = _PNAME_RE.match(text, i)
        if m is not None and ":" in text[i : m.end()]:
            tokens.append(here("PNAME", m.group(0)))
            col += m.end() - i
            i = m.end()
            continue
        if word is not None:
            # bare words only occur inside FILTER conditions
            tokens.append(here("WORD", word.group(0)))
            col += word.end() - i
            i = word.end()
            continue
        m = _OP_RE.match(text, i)
        if m is not None:
            tokens.append(here("OP", m.group(0)))
            col += m.end() - i
            i = m.end()
            continue
        raise QuerySyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col, n))
    return tokens


_UNESCAPE = {"\\\\": "\\", '\\"': '"', "\\n": "\n", "\\t": "\t", "\\r": "\r"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.prefixes: dict[str, str] = {}

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None) -> "QuerySyntaxError":
        tok = tok or self.peek()
        return QuerySyntaxError(message, tok.line, tok.column)

    def expect(self, kind: str, value: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value or kind
            got = tok.value or tok.kind
            raise self.fail(f"expected {want!r}, found {got!r}")
        return self.next()

    def parse_query(self) -> Select:
        while self.peek().kind == "KW" and self.peek().value == "PREFIX":
            self.next()
            name_tok = self.expect("PNAME")
            prefix, local = name_tok.value.split(":", 1)
            if local:
                raise self.fail("prefix declaration must end with ':'", name_tok)
            iri_tok = self.expect("IRI")
            self.prefixes[prefix] = iri_tok.value
        self.expect("KW", "SELECT")
        variables: tuple[str, ...] | None
        if self.peek().kind == "*":
            self.next()
            variables = None
        else:
            names = []
            while self.peek().kind == "VAR":
                names.append(self.next().value[1:])
            if not names:
                raise self.fail("SELECT needs '*' or at least one variable")
            variables = tuple(names)
        self.expect("KW", "WHERE")
        body = self.parse_group()
        self.expect("EOF")
        return Select(variables, body)

    def parse_group(self) -> Expression:
        open_tok = self.expect("{")
        expr: Expression | None = None

        def conjoin(part: Expression) -> None:
            nonlocal expr
            expr = part if expr is None else And(expr, part)

        while True:
            tok = self.peek()
            if tok.kind == "}":
                self.next()
                break
            if tok.kind == "EOF":
                raise self.fail("unterminated group", open_tok)
            if tok.kind == "{":
                inner = self.parse_group()
                while self.peek().kind == "KW" and self.peek().value == "UNION":
                    self.next()
                    inner = Union(inner, self.parse_group())
                conjoin(inner)
                continue
            if tok.kind == "KW" and tok.value == "OPTIONAL":
                if expr is None:
                    raise self.fail("OPTIONAL needs a preceding pattern", tok)
                self.next()
                expr = Optional(expr, self.parse_group())
                continue
            if tok.kind == "KW" and tok.value == "FILTER":
                if expr is None:
                    raise self.fail("FILTER needs a preceding pattern", tok)
                self.next()
                expr = Filter(expr, self.parse_filter_condition())
                continue
            if tok.kind == "KW" and tok.value == "VALUES":
                if expr is None:
                    raise self.fail("VALUES needs a preceding pattern", tok)
                self.next()
                expr = Values(expr, self.parse_datablock())
                continue
            conjoin(self.parse_triple())
        if expr is None:
            raise self.fail("empty group", open_tok)
        return expr

    def parse_filter_condition(self) -> str:
        open_tok = self.expect("(")
        depth = 1
        start = self.peek().offset
        while depth > 0:
            tok = self.next()
            if tok.kind == "EOF":
                raise self.fail("unterminated FILTER condition", open_tok)
            if tok.kind == "(":
                depth += 1
            elif tok.kind == ")":
                depth -= 1
                end = tok.offset
        condition = self.text[start:end].strip()
        if not condition:
            raise self.fail("empty FILTER condition", open_tok)
        return condition

    def parse_datablock(self) -> DataBlock:
        names: list[str] = []
        if self.peek().kind == "VAR":
            names.append(self.next().value[1:])
            single = True
        else:
            self.expect("(")
            while self.peek().kind == "VAR":
                names.append(self.next().value[1:])
            self.expect(")")
            single = False
        self.expect("{")
        rows: list[tuple[Term, ...]] = []
        while self.peek().kind != "}":
            if self.peek().kind == "EOF":
                raise self.fail("unterminated VALUES block")
            if single:
                rows.append((self.parse_constant(),))
            else:
                self.expect("(")
                row = []
                while self.peek().kind != ")":
                    row.append(self.parse_constant())
                self.expect(")")
                rows.append(tuple(row))
        self.next()
        return DataBlock(tuple(names), tuple(rows))

    def parse_constant(self) -> Term:
        tok = self.peek()
        if tok.kind == "IRI":
            return uri(self.next().value)
        if tok.kind == "PNAME":
            return self.resolve_pname(self.next())
        if tok.kind == "STRING":
            return literal(_unescape(self.next().value))
        raise self.fail("expected a constant term", tok)

    def parse_term(self) -> Term:
        tok = self.peek()
        if tok.kind == "VAR":
            return variable(self.next().value)
        return self.parse_constant()

    def parse_triple(self) -> TriplePattern:
        first = self.peek()
        s = self.parse_term()
        p = self.parse_term()
        o = self.parse_term()
        try:
            pattern = TriplePattern(s, p, o)
        except ValueError as exc:
            raise self.fail(str(exc), first) from exc
        nxt = self.peek()
        if nxt.kind == ".":
            self.next()
        elif nxt.kind not in ("}", "EOF"):
            raise self.fail("expected '.' after triple pattern", nxt)
        return pattern

    def resolve_pname(self, tok: _Token) -> Term:
        prefix, local = tok.value.split(":", 1)
        base = self.prefixes.get(prefix)
        if base is None:
            raise self.fail(f"undeclared prefix {prefix + ':'!r}", tok)
        return uri(base + local)


def _unescape(raw: str) -> str:
    return re.sub(r"\\.", lambda m: _UNESCAPE.get(m.group(0), m.group(0)), raw)


def parse_query(text: str) -> Select:
    """Parse a query; raises QuerySyntaxError with line/column on bad input."""
    return _Parser(text).parse_query()


def format_query(query: Select | Expression) -> str:
    """Canonical text for an AST; parsing it back yields an equal AST."""
    if not isinstance(query, Select):
        query = Select(None, query)
    head = "*" if query.variables is None else " ".join("?" + v for v in query.variables)
    body = "\n".join("  " + line for line in _body_lines(query.inner))
    return f"SELECT {head} WHERE {{\n{body}\n}}\n"


def _body_lines(e: Expression, indent: str = "  ") -> list[str]:
    if isinstance(e, TriplePattern):
        return [f"{e} ."]
    if isinstance(e, And):
        return _body_lines(e.left, indent) + _body_lines(e.right, indent)
    if isinstance(e, Optional):
        return _body_lines(e.left, indent) + _block("OPTIONAL", e.right, indent)
    if isinstance(e, Filter):
        return _body_lines(e.inner, indent) + [f"FILTER ({e.condition})"]
    if isinstance(e, Values):
        return _body_lines(e.inner, indent) + [_format_datablock(e.block)]
    if isinstance(e, Union):
        return (
            ["{"]
            + [indent + line for line in _body_lines(e.left, indent)]
            + ["} UNION {"]
            + [indent + line for line in _body_lines(e.right, indent)]
            + ["}"]
        )
    if isinstance(e, Select):
        raise ValueError("nested SELECT cannot be printed")
    raise TypeError(f"not an expression: {e!r}")


def _block(keyword: str | None, e: Expression, indent: str) -> list[str]:
    head = f"{keyword} {{" if keyword else "{"
    return [head] + [indent + line for line in _body_lines(e, indent)] + ["}"]


def _format_datablock(block: DataBlock) -> str:
    names = " ".join("?" + v for v in block.variables)
    rows = " ".join("(" + " ".join(str(t) for t in row) + ")" for row in block.rows)
    return f"VALUES ({names}) {{ {rows} }}"


def executable_bgp(query: Select) -> tuple[TriplePattern, ...]:
    """The unique patterns of a conjunction-only query body, in source order.

    Raises ValueError when the body uses constructs outside the executable
    core (UNION, OPTIONAL, FILTER, VALUES).
    """
    patterns = bgp_patterns(query.inner)
    if patterns is None:
        raise ValueError("only basic graph pattern queries can be executed")
    unique: dict[TriplePattern, None] = {}
    for p in patterns:
        unique.setdefault(p, None)
    return tuple(unique)

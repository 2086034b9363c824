"""Predicate expressions over row attributes (minority-group selection).

Grammar (EBNF):
    expression = term , { "or" , term } ;
    term       = factor , { "and" , factor } ;
    factor     = "(" , expression , ")" | comparison ;
    comparison = identifier , ( "==" | "!=" ) , literal ;
    literal    = "'" chars "'" | '"' chars '"' | number | identifier ;

Comparisons are string equality unless both sides parse as numbers.
"""

from __future__ import annotations

import re
from typing import Any, Callable

from ..errors import ValidationError

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<lparen>\()|(?P<rparen>\))|(?P<op>==|!=)"
    r"|(?P<string>'[^']*'|\"[^\"]*\")"
    r"|(?P<number>-?\d+(?:\.\d+)?)"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_\-]*))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ValidationError(f"bad token in expression at offset {pos}: {text!r}")
        pos = m.end()
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ValidationError("unexpected end of expression")
        self.pos += 1
        return tok

    def expression(self):
        node = self.term()
        while self.peek() == ("word", "or"):
            self.take()
            right = self.term()
            node = ("or", node, right)
        return node

    def term(self):
        node = self.factor()
        while self.peek() == ("word", "and"):
            self.take()
            right = self.factor()
            node = ("and", node, right)
        return node

    def factor(self):
        kind, value = self.take()
        if kind == "lparen":
            node = self.expression()
            if self.take()[0] != "rparen":
                raise ValidationError("missing closing parenthesis")
            return node
        if kind != "word":
            raise ValidationError(f"expected column name, got {value!r}")
        column = value
        op_kind, op = self.take()
        if op_kind != "op":
            raise ValidationError(f"expected == or != after {column!r}")
        lit_kind, lit = self.take()
        if lit_kind == "string":
            literal: Any = lit[1:-1]
        elif lit_kind == "number":
            literal = float(lit)
        elif lit_kind == "word":
            literal = lit
        else:
            raise ValidationError(f"expected literal after operator, got {lit!r}")
        return ("cmp", column, op, literal)


def _compare(row_value: Any, op: str, literal: Any) -> bool:
    if isinstance(literal, float):
        try:
            equal = float(row_value) == literal
        except (TypeError, ValueError):
            equal = False
    else:
        equal = str(row_value) == str(literal)
    return equal if op == "==" else not equal


def parse_predicate(text: str) -> Callable[[dict[str, Any]], bool]:
    """Compile the expression to a row predicate; raises on syntax errors."""
    parser = _Parser(_tokenize(text))
    tree = parser.expression()
    if parser.peek() is not None:
        raise ValidationError(f"trailing tokens in expression: {text!r}")

    def evaluate(node, row: dict[str, Any]) -> bool:
        tag = node[0]
        if tag == "or":
            return evaluate(node[1], row) or evaluate(node[2], row)
        if tag == "and":
            return evaluate(node[1], row) and evaluate(node[2], row)
        _, column, op, literal = node
        if column not in row:
            raise ValidationError(f"expression references unknown column {column!r}")
        return _compare(row[column], op, literal)

    return lambda row: evaluate(tree, row)

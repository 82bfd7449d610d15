"""Recursive-descent parser for the rule-expression grammar.

Errors carry the 1-based source column where parsing failed.
"""

from __future__ import annotations

import re

from ..errors import ParseError
from .expr import (
    AGGREGATIONS,
    MAX_DEPTH,
    And,
    Comparison,
    Or,
    RuleExpr,
    SustainedFor,
    TimeOutside,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<time>\d{2}:\d{2})
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_:]*)
  | (?P<string>"[^"\\]*")
  | (?P<op><=|>=|==|!=|<|>)
  | (?P<punct>[(){}\[\],=])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "time_outside", "sustained_for"}
_AGG_FUNCS = {f"{name}_over_time": name for name in AGGREGATIONS}


class _Token:
    __slots__ = ("kind", "text", "column")

    def __init__(self, kind: str, text: str, column: int):
        self.kind = kind
        self.text = text
        self.column = column


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos + 1)
        kind = match.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, match.group(), pos + 1))
        pos = match.end()
    tokens.append(_Token("eof", "", len(source) + 1))
    return tokens


def _describe(token: "_Token") -> str:
    return repr(token.text) if token.text else "end of input"


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.depth = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, text: str) -> _Token:
        token = self.peek()
        if token.text != text:
            raise ParseError(
                f"expected {text!r}, found {_describe(token)}", token.column
            )
        return self.advance()

    def _enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError(f"expression nests deeper than {MAX_DEPTH} levels",
                             self.peek().column)

    def _exit(self):
        self.depth -= 1

    def parse(self) -> RuleExpr:
        expr = self.parse_or()
        token = self.peek()
        if token.kind != "eof":
            raise ParseError(f"unexpected trailing input {token.text!r}", token.column)
        return expr

    def parse_or(self) -> RuleExpr:
        self._enter()
        try:
            node = self.parse_and()
            while self.peek().text == "or":
                self.advance()
                node = Or(node, self.parse_and())
            return node
        finally:
            self._exit()

    def parse_and(self) -> RuleExpr:
        self._enter()
        try:
            node = self.parse_unary()
            while self.peek().text == "and":
                self.advance()
                node = And(node, self.parse_unary())
            return node
        finally:
            self._exit()

    def parse_unary(self) -> RuleExpr:
        token = self.peek()
        if token.text == "(":
            self.advance()
            node = self.parse_or()
            self.expect(")")
            return node
        if token.text == "time_outside":
            return self.parse_time_outside()
        if token.text == "sustained_for":
            return self.parse_sustained_for()
        if token.kind == "ident":
            return self.parse_comparison()
        raise ParseError(
            f"expected an expression, found {_describe(token)}", token.column
        )

    def parse_time(self) -> int:
        token = self.peek()
        if token.kind != "time":
            raise ParseError(f"expected HH:MM, found {token.text!r}", token.column)
        self.advance()
        hours, minutes = (int(part) for part in token.text.split(":"))
        if hours > 23 or minutes > 59:
            raise ParseError(f"invalid time of day {token.text!r}", token.column)
        return hours * 60 + minutes

    def parse_time_outside(self) -> TimeOutside:
        self.advance()
        self.expect("(")
        start = self.parse_time()
        self.expect(",")
        end = self.parse_time()
        self.expect(")")
        return TimeOutside(start, end)

    def parse_minutes(self) -> int:
        token = self.peek()
        if token.kind != "number" or not token.text.isdigit():
            raise ParseError(f"expected a minute count, found {token.text!r}",
                             token.column)
        self.advance()
        suffix = self.peek()
        if suffix.text != "m":
            raise ParseError("minute counts are written like 5m", suffix.column)
        self.advance()
        return int(token.text)

    def parse_sustained_for(self) -> SustainedFor:
        column = self.peek().column
        self.advance()
        self.expect("(")
        self._enter()
        try:
            inner = self.parse_or()
        finally:
            self._exit()
        self.expect(",")
        minutes = self.parse_minutes()
        self.expect(")")
        if minutes < 1:
            raise ParseError("sustain span must be at least 1 minute", column)
        return SustainedFor(inner, minutes)

    def parse_matchers(self) -> tuple[tuple[str, str], ...]:
        self.expect("{")
        matchers = []
        if self.peek().text != "}":
            while True:
                key = self.peek()
                if key.kind != "ident":
                    raise ParseError(f"expected a label name, found {key.text!r}",
                                     key.column)
                self.advance()
                self.expect("=")
                value = self.peek()
                if value.kind != "string":
                    raise ParseError(
                        f"expected a quoted label value, found {value.text!r}",
                        value.column,
                    )
                self.advance()
                matchers.append((key.text, value.text[1:-1]))
                if self.peek().text != ",":
                    break
                self.advance()
        self.expect("}")
        return tuple(matchers)

    def parse_comparison(self) -> Comparison:
        head = self.advance()
        agg = None
        range_minutes = None
        if head.text in _AGG_FUNCS:
            agg = _AGG_FUNCS[head.text]
            self.expect("(")
            metric_token = self.peek()
            if metric_token.kind != "ident":
                raise ParseError(
                    f"expected a metric name, found {metric_token.text!r}",
                    metric_token.column,
                )
            self.advance()
            metric = metric_token.text
            matchers = self.parse_matchers() if self.peek().text == "{" else ()
            self.expect("[")
            range_minutes = self.parse_minutes()
            self.expect("]")
            self.expect(")")
        else:
            metric = head.text
            matchers = self.parse_matchers() if self.peek().text == "{" else ()
        op_token = self.peek()
        if op_token.kind != "op":
            raise ParseError(
                f"expected a comparison operator, found {_describe(op_token)}",
                op_token.column,
            )
        self.advance()
        number = self.peek()
        if number.kind != "number":
            raise ParseError(
                f"expected a threshold number, found {_describe(number)}",
                number.column,
            )
        self.advance()
        return Comparison(
            metric=metric,
            op=op_token.text,
            threshold=float(number.text),
            matchers=matchers,
            agg=agg,
            range_minutes=range_minutes,
        )


def parse_rule(source: str) -> RuleExpr:
    """Parse rule-expression source text into its syntax tree."""
    return _Parser(source).parse()

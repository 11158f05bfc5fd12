"""The order-of-actions expression language of scenario models.

Grammar (whitespace insignificant)::

    expr   := term ('|' term)*
    term   := factor ('.' factor)*
    factor := '<'id'>' | '(' '!'? id ')' | '['id']' | '{'id'}' | '(' expr ')'

'.' (sequential combination) binds tighter than '|' (non-deterministic
choice).  After ``(`` the input is a signal-receive leaf exactly when it
consists of an optional ``!`` plus one identifier before ``)``; anything else
is a parenthesised sub-expression.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ParseError


@dataclass(frozen=True)
class BlockRef:
    name: str


@dataclass(frozen=True)
class ReceiveRef:
    name: str
    first: bool = False


@dataclass(frozen=True)
class SendRef:
    name: str


@dataclass(frozen=True)
class JumpRef:
    name: str


@dataclass(frozen=True)
class Seq:
    children: tuple = ()


@dataclass(frozen=True)
class Choice:
    children: tuple = ()


ProcessExpr = BlockRef | ReceiveRef | SendRef | JumpRef | Seq | Choice

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass
class _Scanner:
    text: str
    pos: int = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str):
        self.skip_ws()
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", column=self.pos + 1)
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise ParseError("expected an action name", column=self.pos + 1)
        self.pos = m.end()
        return m.group()


def parse_process(text: str) -> ProcessExpr:
    """Parse an order-of-actions expression."""
    if not text or not text.strip():
        raise ParseError("empty process expression", column=1)
    sc = _Scanner(text)
    expr = _parse_expr(sc)
    sc.skip_ws()
    if sc.pos != len(text):
        raise ParseError(f"unexpected {text[sc.pos]!r}", column=sc.pos + 1)
    return expr


def _parse_expr(sc: _Scanner) -> ProcessExpr:
    terms = [_parse_term(sc)]
    while sc.peek() == "|":
        sc.take("|")
        terms.append(_parse_term(sc))
    return terms[0] if len(terms) == 1 else Choice(tuple(terms))


def _parse_term(sc: _Scanner) -> ProcessExpr:
    factors = [_parse_factor(sc)]
    while sc.peek() == ".":
        sc.take(".")
        factors.append(_parse_factor(sc))
    return factors[0] if len(factors) == 1 else Seq(tuple(factors))


def _parse_factor(sc: _Scanner) -> ProcessExpr:
    ch = sc.peek()
    if ch == "<":
        sc.take("<")
        name = sc.ident()
        sc.take(">")
        return BlockRef(name)
    if ch == "[":
        sc.take("[")
        name = sc.ident()
        sc.take("]")
        return SendRef(name)
    if ch == "{":
        sc.take("{")
        name = sc.ident()
        sc.take("}")
        return JumpRef(name)
    if ch == "(":
        sc.take("(")
        # Leaf lookahead: optional '!' plus a single identifier before ')'
        # is a receive; anything else is a grouped sub-expression.
        save = sc.pos
        first = False
        if sc.peek() == "!":
            sc.take("!")
            first = True
        try:
            name = sc.ident()
            is_leaf = sc.peek() == ")"
        except ParseError:
            is_leaf = False
        if is_leaf:
            sc.take(")")
            return ReceiveRef(name, first)
        sc.pos = save
        if first:
            raise ParseError("'!' is only allowed before a receive name", column=sc.pos + 1)
        inner = _parse_expr(sc)
        sc.take(")")
        return inner
    if not ch:
        raise ParseError("unexpected end of expression", column=sc.pos + 1)
    raise ParseError(f"unexpected {ch!r}", column=sc.pos + 1)


def print_process(expr: ProcessExpr) -> str:
    """Canonical text with minimal parentheses; re-parses to the same AST."""
    return _print(expr, parent=None)


def _print(expr: ProcessExpr, parent) -> str:
    if isinstance(expr, BlockRef):
        return f"<{expr.name}>"
    if isinstance(expr, ReceiveRef):
        return f"(!{expr.name})" if expr.first else f"({expr.name})"
    if isinstance(expr, SendRef):
        return f"[{expr.name}]"
    if isinstance(expr, JumpRef):
        return f"{{{expr.name}}}"
    if isinstance(expr, Seq):
        body = ".".join(_print(c, Seq) for c in expr.children)
        # nested same-kind nodes and choices under sequences keep parentheses
        # so the printed text re-parses to the identical tree
        return f"({body})" if parent is Seq else body
    if isinstance(expr, Choice):
        body = " | ".join(_print(c, Choice) for c in expr.children)
        return f"({body})" if parent in (Seq, Choice) else body
    raise TypeError(f"not a process expression: {expr!r}")


def leaves(expr: ProcessExpr):
    """All leaf references in document order."""
    if isinstance(expr, (Seq, Choice)):
        for child in expr.children:
            yield from leaves(child)
    else:
        yield expr


def first_leaf(expr: ProcessExpr):
    return next(leaves(expr))

"""Parser for the C subset understood by the bundled checker.

Supported: integer and opaque-pointer values, global and local declarations,
assignment (including ``+=``/``-=`` and ``++``/``--``), ``if``/``else``,
bounded ``while``, ``goto`` to function-top-level labels, ``return``, calls,
short-circuit boolean operators, comparisons and integer arithmetic.  Struct
member access, address-of and array indexing are outside the subset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..ctokens import KEYWORDS, TYPE_STARTERS, Token, significant, tokenize
from ..errors import ParseError


@dataclass(frozen=True)
class ENum:
    value: int


@dataclass(frozen=True)
class EStr:
    text: str


@dataclass(frozen=True)
class EId:
    name: str


@dataclass(frozen=True)
class EUnary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class EBinary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class ECall:
    name: str
    args: tuple
    line: int


Expr = ENum | EStr | EId | EUnary | EBinary | ECall


@dataclass
class SDecl:
    name: str
    init: Expr | None
    line: int


@dataclass
class SAssign:
    name: str
    op: str  # = += -=
    value: Expr
    line: int


@dataclass
class SIncDec:
    name: str
    op: str  # ++ --
    line: int


@dataclass
class SExpr:
    expr: Expr
    line: int


@dataclass
class SIf:
    cond: Expr
    then: list
    orelse: list
    line: int


@dataclass
class SWhile:
    cond: Expr
    body: list
    line: int


@dataclass
class SReturn:
    value: Expr | None
    line: int


@dataclass
class SGoto:
    label: str
    line: int


@dataclass
class SLabel:
    name: str
    line: int


Stmt = SDecl | SAssign | SIncDec | SExpr | SIf | SWhile | SReturn | SGoto | SLabel


@dataclass
class Function:
    name: str
    params: list[str]
    body: list
    line: int
    end_line: int


@dataclass
class Program:
    globals: list[tuple[str, Expr | None, int]] = field(default_factory=list)
    functions: dict[str, Function] = field(default_factory=dict)


class _TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", line=tok.line)
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text


def parse_program(source: str) -> Program:
    ts = _TokenStream(significant(tokenize(source)))
    program = Program()
    while ts.peek() is not None:
        _parse_top_level(ts, program)
    return program


def _skip_balanced(ts: _TokenStream, open_text: str, close_text: str) -> None:
    depth = 0
    while True:
        tok = ts.next()
        if tok.text == open_text:
            depth += 1
        elif tok.text == close_text:
            depth -= 1
            if depth == 0:
                return


def _parse_top_level(ts: _TokenStream, program: Program) -> None:
    tok = ts.peek()
    if tok.text == ";":
        ts.next()
        return
    if tok.text == "typedef":
        while not ts.at(";"):
            if ts.at("{"):
                _skip_balanced(ts, "{", "}")
            else:
                ts.next()
        ts.next()
        return
    if tok.text in ("struct", "union", "enum"):
        # definition, forward declaration or a variable of aggregate type
        save = ts.pos
        ts.next()
        if ts.peek() and ts.peek().kind == "id":
            ts.next()
        if ts.at("{"):
            _skip_balanced(ts, "{", "}")
            if ts.at(";"):
                ts.next()
                return
            # fall through: declarator after the definition
        elif ts.at(";"):
            ts.next()
            return
        ts.pos = save
    _parse_declaration_or_function(ts, program)


def _parse_declaration_or_function(ts: _TokenStream, program: Program) -> None:
    start_line = ts.peek().line
    # consume type/storage tokens and pointer stars up to the declared name
    name = None
    while True:
        tok = ts.peek()
        if tok is None:
            raise ParseError("unexpected end of declaration", line=start_line)
        if tok.kind == "id" and tok.text not in KEYWORDS and tok.text not in TYPE_STARTERS:
            nxt = ts.peek(1)
            if nxt is not None and nxt.text in ("(", "=", ";", ",", "["):
                name = ts.next().text
                break
            # unknown typedef name used as a type: treat as type token
            ts.next()
            continue
        if tok.text in ("(", ";"):
            break
        ts.next()
    if name is None:
        # degenerate declaration such as a lone prototype of unknown shape
        while ts.peek() is not None and not ts.at(";"):
            if ts.at("{"):
                _skip_balanced(ts, "{", "}")
                return
            ts.next()
        if ts.at(";"):
            ts.next()
        return

    if ts.at("("):
        open_pos = ts.pos
        _skip_balanced(ts, "(", ")")
        if ts.at("{"):
            params = _param_names(ts.tokens[open_pos + 1 : ts.pos - 1])
            line = ts.peek().line
            body = _parse_block(ts)
            end_line = ts.tokens[ts.pos - 1].line
            program.functions[name] = Function(name, params, body, start_line, end_line)
            return
        # prototype: skip to ';'
        while ts.peek() is not None and not ts.at(";"):
            ts.next()
        if ts.at(";"):
            ts.next()
        return

    # global variable, possibly initialized
    init = None
    if ts.at("="):
        ts.next()
        init = _parse_expression(ts)
    program.globals.append((name, init, start_line))
    while not ts.at(";"):
        tok = ts.next()  # tolerate extra declarators without initializers
        if tok.kind == "id" and not ts.at("="):
            program.globals.append((tok.text, None, tok.line))
    ts.expect(";")


def _param_names(tokens: list[Token]) -> list[str]:
    names: list[str] = []
    depth = 0
    segment: list[Token] = []
    for tok in tokens + [Token("punct", ",", 0, 0, 0)]:
        if tok.text in ("(", "["):
            depth += 1
        elif tok.text in (")", "]"):
            depth -= 1
        if tok.text == "," and depth == 0:
            ids = [t for t in segment if t.kind == "id" and t.text not in KEYWORDS
                   and t.text not in TYPE_STARTERS]
            if ids:
                names.append(ids[-1].text)
            segment = []
        else:
            segment.append(tok)
    return names


def _parse_block(ts: _TokenStream) -> list:
    ts.expect("{")
    stmts: list = []
    while not ts.at("}"):
        if ts.peek() is None:
            raise ParseError("unterminated block")
        stmts.extend(_parse_statement(ts))
    ts.expect("}")
    return stmts


def _parse_statement(ts: _TokenStream) -> list:
    tok = ts.peek()
    if tok.text == ";":
        ts.next()
        return []
    if tok.text == "{":
        return _parse_block(ts)
    if tok.text == "if":
        line = ts.next().line
        ts.expect("(")
        cond = _parse_expression(ts)
        ts.expect(")")
        then = _parse_statement(ts)
        orelse: list = []
        if ts.at("else"):
            ts.next()
            orelse = _parse_statement(ts)
        return [SIf(cond, then, orelse, line)]
    if tok.text == "while":
        line = ts.next().line
        ts.expect("(")
        cond = _parse_expression(ts)
        ts.expect(")")
        body = _parse_statement(ts)
        return [SWhile(cond, body, line)]
    if tok.text == "return":
        line = ts.next().line
        value = None if ts.at(";") else _parse_expression(ts)
        ts.expect(";")
        return [SReturn(value, line)]
    if tok.text == "goto":
        line = ts.next().line
        label = ts.next().text
        ts.expect(";")
        return [SGoto(label, line)]
    if tok.kind == "id" and ts.peek(1) is not None and ts.peek(1).text == ":":
        name = ts.next().text
        line = tok.line
        ts.expect(":")
        rest: list = []
        if not ts.at("}"):
            rest = _parse_statement(ts)
        return [SLabel(name, line)] + rest
    if tok.kind == "id" and (tok.text in TYPE_STARTERS or _looks_like_declaration(ts)):
        return _parse_local_declaration(ts)
    return [_parse_expression_statement(ts)]


def _looks_like_declaration(ts: _TokenStream) -> bool:
    # `name name` or `name *name` shapes introduced by typedef'd types
    first = ts.peek()
    second = ts.peek(1)
    if first is None or second is None or first.kind != "id":
        return False
    if second.kind == "id" and second.text not in KEYWORDS:
        third = ts.peek(2)
        return third is not None and third.text in (";", "=", ",")
    return False


def _parse_local_declaration(ts: _TokenStream) -> list:
    line = ts.peek().line
    stmts: list = []
    # consume type tokens until the declared identifier
    name = None
    while True:
        tok = ts.peek()
        if tok is None:
            raise ParseError("unexpected end of declaration", line=line)
        if tok.kind == "id" and tok.text not in KEYWORDS and tok.text not in TYPE_STARTERS:
            nxt = ts.peek(1)
            if nxt is not None and nxt.text in ("=", ";", ","):
                break
        if tok.text == ";":
            ts.next()
            return stmts
        ts.next()
    while True:
        name = ts.next().text
        init = None
        if ts.at("="):
            ts.next()
            init = _parse_expression(ts)
        stmts.append(SDecl(name, init, line))
        if ts.at(","):
            ts.next()
            while ts.peek() is not None and ts.peek().text == "*":
                ts.next()
            continue
        break
    ts.expect(";")
    return stmts


def _parse_expression_statement(ts: _TokenStream):
    tok = ts.peek()
    line = tok.line
    nxt = ts.peek(1)
    if tok.kind == "id" and nxt is not None:
        if nxt.text in ("=", "+=", "-="):
            name = ts.next().text
            op = ts.next().text
            value = _parse_expression(ts)
            ts.expect(";")
            return SAssign(name, "=" if op == "=" else op, value, line)
        if nxt.text in ("++", "--"):
            name = ts.next().text
            op = ts.next().text
            ts.expect(";")
            return SIncDec(name, op, line)
    if tok.text in ("++", "--"):
        op = ts.next().text
        name = ts.next().text
        ts.expect(";")
        return SIncDec(name, op, line)
    expr = _parse_expression(ts)
    ts.expect(";")
    return SExpr(expr, line)


_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]


def _parse_expression(ts: _TokenStream) -> Expr:
    return _parse_binary(ts, 0)


def _parse_binary(ts: _TokenStream, level: int) -> Expr:
    if level >= len(_BINARY_LEVELS):
        return _parse_unary(ts)
    expr = _parse_binary(ts, level + 1)
    while True:
        tok = ts.peek()
        if tok is None or tok.text not in _BINARY_LEVELS[level]:
            return expr
        op = ts.next().text
        right = _parse_binary(ts, level + 1)
        expr = EBinary(op, expr, right)


def _parse_unary(ts: _TokenStream) -> Expr:
    tok = ts.peek()
    if tok is None:
        raise ParseError("unexpected end of expression")
    if tok.text in ("!", "-", "+", "~"):
        ts.next()
        return EUnary(tok.text, _parse_unary(ts))
    if tok.text == "(" and _is_cast(ts):
        ts.next()
        while not ts.at(")"):
            ts.next()
        ts.expect(")")
        return EUnary("cast", _parse_unary(ts))
    return _parse_primary(ts)


def _is_cast(ts: _TokenStream) -> bool:
    nxt = ts.peek(1)
    if nxt is None or nxt.kind != "id":
        return False
    if nxt.text not in TYPE_STARTERS:
        return False
    i = 2
    while True:
        tok = ts.peek(i)
        if tok is None:
            return False
        if tok.text == ")":
            after = ts.peek(i + 1)
            return after is not None and (
                after.kind in ("id", "num", "str") or after.text in ("(", "!", "-", "~")
            )
        if tok.kind != "id" and tok.text != "*":
            return False
        i += 1


def _parse_primary(ts: _TokenStream) -> Expr:
    tok = ts.next()
    if tok.kind == "num":
        return ENum(_int_value(tok.text, tok.line))
    if tok.kind == "str":
        return EStr(tok.text)
    if tok.kind == "char":
        return ENum(ord(tok.text[1]) if len(tok.text) >= 3 else 0)
    if tok.text == "(":
        expr = _parse_expression(ts)
        ts.expect(")")
        return expr
    if tok.kind == "id":
        if tok.text in ("true", "false"):
            return ENum(1 if tok.text == "true" else 0)
        if ts.at("("):
            ts.next()
            args: list[Expr] = []
            if not ts.at(")"):
                args.append(_parse_expression(ts))
                while ts.at(","):
                    ts.next()
                    args.append(_parse_expression(ts))
            ts.expect(")")
            return ECall(tok.text, tuple(args), tok.line)
        return EId(tok.text)
    raise ParseError(f"unsupported expression token {tok.text!r}", line=tok.line)


def _int_value(text: str, line: int) -> int:
    t = text.rstrip("uUlLfF")
    try:
        if t.lower().startswith("0x"):
            return int(t, 16)
        if "." in t:
            raise ValueError
        return int(t, 10)
    except ValueError:
        raise ParseError(f"unsupported numeric literal {text!r}", line=line)

"""Lightweight C tokenizer shared by the symbol scanner, weaver and checker.

This is deliberately not a C parser: it splits preprocessed (or
preprocessor-light) C into identifiers, literals, punctuation, comments and
preprocessor lines while tracking byte offsets and line numbers, which is all
the token-level passes need.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_TOKEN_RE = re.compile(
    r"""
      (?P<comment>//[^\n]*|/\*.*?\*/)
    | (?P<str>"(?:\\.|[^"\\\n])*")
    | (?P<char>'(?:\\.|[^'\\\n])*')
    | (?P<num>(?:0[xX][0-9a-fA-F]+|\d+\.\d+|\.\d+|\d+)[uUlLfF]*)
    | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<punct>->|\+\+|--|<<=|>>=|<<|>>|<=|>=|==|!=|&&|\|\||\+=|-=|\*=|/=|%=|&=|\|=|\^=
        |[-+*/%&|^!~<>=?:;,.(){}\[\]\\#@$])
    """,
    re.VERBOSE | re.DOTALL,
)

KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool bool true false""".split()
)

# First tokens that mark a statement as a declaration for the heuristics
# in the symbol scanner and the bundled checker.
TYPE_STARTERS = frozenset(
    """void int char long short unsigned signed float double bool _Bool
    const static struct union enum size_t ssize_t gfp_t u8 u16 u32 u64
    s8 s16 s32 s64 uint8_t uint16_t uint32_t uint64_t int8_t int16_t
    int32_t int64_t""".split()
)


@dataclass(frozen=True)
class Token:
    kind: str  # comment | str | char | num | id | punct | pp
    text: str
    line: int
    start: int
    end: int


def tokenize(source: str, keep_comments: bool = False) -> list[Token]:
    """Tokenize C text.

    Preprocessor directives (a ``#`` first on its line, with backslash
    continuations) come back as single ``pp`` tokens.  Comments are dropped
    unless ``keep_comments`` is set.
    """
    tokens: list[Token] = []
    pos = 0
    line = 1
    at_line_start = True
    n = len(source)
    while pos < n:
        ch = source[pos]
        if ch == "\n":
            line += 1
            pos += 1
            at_line_start = True
            continue
        if ch in " \t\r\f\v":
            pos += 1
            continue
        if ch == "#" and at_line_start:
            start = pos
            while pos < n:
                nl = source.find("\n", pos)
                if nl == -1:
                    pos = n
                    break
                if source[nl - 1] == "\\":
                    pos = nl + 1
                    line += 1
                else:
                    pos = nl
                    break
            tokens.append(Token("pp", source[start:pos], line, start, pos))
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            # Unknown byte: skip it rather than fail, token passes only
            # need the structure they understand.
            pos += 1
            at_line_start = False
            continue
        kind = m.lastgroup or "punct"
        text = m.group()
        if kind != "comment" or keep_comments:
            tokens.append(Token(kind, text, line, m.start(), m.end()))
        line += text.count("\n")
        pos = m.end()
        at_line_start = False
    return tokens


def significant(tokens: list[Token]) -> list[Token]:
    """Drop comments and preprocessor lines."""
    return [t for t in tokens if t.kind not in ("comment", "pp")]


def match_paren(tokens: list[Token], open_index: int) -> int:
    """Index of the ``)`` matching ``(`` at open_index, or -1."""
    depth = 0
    for i in range(open_index, len(tokens)):
        t = tokens[i].text
        if t == "(":
            depth += 1
        elif t == ")":
            depth -= 1
            if depth == 0:
                return i
    return -1


def match_brace(tokens: list[Token], open_index: int) -> int:
    """Index of the ``}`` matching ``{`` at open_index, or -1."""
    depth = 0
    for i in range(open_index, len(tokens)):
        t = tokens[i].text
        if t == "{":
            depth += 1
        elif t == "}":
            depth -= 1
            if depth == 0:
                return i
    return -1

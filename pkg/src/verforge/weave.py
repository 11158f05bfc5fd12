"""Token-level aspect weaving and source merging.

Binds models to program code: ``around: call`` advice reroutes call sites
through generated wrappers, ``around: execution`` advice replaces function
bodies, and ``merge`` concatenates sources into one translation unit with
file-scope statics renamed apart, duplicate type definitions dropped and
unreachable functions pruned.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .buildbase import extract_symbols
from .ctokens import KEYWORDS, TYPE_STARTERS, Token, match_brace, match_paren, significant, tokenize
from .errors import MergeError, ParseError


@dataclass(frozen=True)
class AdviceSignature:
    return_type: str
    name: str
    params: tuple[str, ...]  # full parameter declaration texts

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def param_names(self) -> tuple[str, ...]:
        names = []
        for p in self.params:
            m = re.search(r"([A-Za-z_][A-Za-z0-9_]*)\s*(?:\[[^\]]*\])?\s*$", p)
            names.append(m.group(1) if m else p)
        return tuple(names)


@dataclass(frozen=True)
class Advice:
    kind: str  # call | execution
    signature: AdviceSignature
    body: str  # statement block without the outer braces


@dataclass
class WeaveReport:
    counts: dict[int, int] = field(default_factory=dict)  # advice index -> matches
    replaced_ranges: list[tuple[int, int]] = field(default_factory=list)
    line_origins: list[int | None] = field(default_factory=list)
    # per output line: the originating input line, None for generated text


_AROUND = re.compile(r"around\s*:")


def parse_aspect(text: str) -> list[Advice]:
    """Parse ``around: (call|execution)(<declaration>) { <body> }`` clauses."""
    tokens = [t for t in tokenize(text, keep_comments=True) if t.kind != "comment"]
    advice: list[Advice] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind == "id" and tok.text != "around":
            raise ParseError(f"unsupported clause {tok.text!r}", line=tok.line)
        if not (tok.kind == "id" and tok.text == "around"):
            i += 1
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].text != ":":
            raise ParseError("expected ':' after 'around'", line=tok.line)
        kind_tok = tokens[i + 2] if i + 2 < len(tokens) else None
        if kind_tok is None or kind_tok.text not in ("call", "execution"):
            raise ParseError(
                f"unsupported pointcut {(kind_tok.text if kind_tok else '<eof>')!r}",
                line=tok.line,
            )
        open_paren = i + 3
        if open_paren >= len(tokens) or tokens[open_paren].text != "(":
            raise ParseError("expected '(' after the pointcut kind", line=kind_tok.line)
        close_paren = match_paren(tokens, open_paren)
        if close_paren == -1:
            raise ParseError("unterminated pointcut declaration", line=kind_tok.line)
        open_brace = close_paren + 1
        if open_brace >= len(tokens) or tokens[open_brace].text != "{":
            raise ParseError("expected advice body", line=tokens[close_paren].line)
        close_brace = match_brace(tokens, open_brace)
        if close_brace == -1:
            raise ParseError("unterminated advice body", line=tokens[open_brace].line)
        decl_text = text[tokens[open_paren].end : tokens[close_paren].start]
        body = text[tokens[open_brace].end : tokens[close_brace].start]
        advice.append(
            Advice(kind_tok.text, _parse_signature(decl_text, kind_tok.line), _dedent(body))
        )
        i = close_brace + 1
    return advice


def _dedent(body: str) -> str:
    lines = [l for l in body.splitlines() if l.strip()]
    if not lines:
        return ""
    indent = min(len(l) - len(l.lstrip()) for l in lines)
    return "\n".join(l[indent:].rstrip() for l in lines)


def _parse_signature(decl: str, line: int) -> AdviceSignature:
    m = re.match(r"^\s*(.*?)\s*\b([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", decl, re.DOTALL)
    if not m:
        raise ParseError(f"cannot parse advice declaration {decl!r}", line=line)
    return_type, name, params_text = m.group(1), m.group(2), m.group(3)
    params: list[str] = []
    depth = 0
    current = ""
    for ch in params_text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            params.append(current.strip())
            current = ""
        else:
            current += ch
    if current.strip():
        params.append(current.strip())
    if params == ["void"]:
        params = []
    return AdviceSignature(return_type.strip() or "void", name, tuple(params))


def _wrapper_name(advice: Advice) -> str:
    return f"ldv_call_{advice.signature.name}_{advice.signature.arity}"


def _call_arity(tokens: list[Token], open_index: int) -> int:
    close = match_paren(tokens, open_index)
    if close == open_index + 1:
        return 0
    depth = 0
    commas = 0
    for i in range(open_index, close):
        t = tokens[i].text
        if t in ("(", "["):
            depth += 1
        elif t in (")", "]"):
            depth -= 1
        elif t == "," and depth == 1:
            commas += 1
    return commas + 1


def weave(source: str, advice: list[Advice]) -> tuple[str, WeaveReport]:
    """Apply advice to one preprocessed source; unmatched text is unchanged."""
    report = WeaveReport(counts={i: 0 for i in range(len(advice))})
    if not advice:
        return source, report

    tokens = significant(tokenize(source))
    call_advice = {
        (a.signature.name, a.signature.arity): (i, a)
        for i, a in reversed(list(enumerate(advice)))
        if a.kind == "call"
    }
    exec_advice = {
        (a.signature.name, a.signature.arity): (i, a)
        for i, a in reversed(list(enumerate(advice)))
        if a.kind == "execution"
    }

    edits: list[tuple[int, int, str]] = []  # (start, end, replacement)
    depth = 0
    i = 0
    wrappers_used: dict[str, Advice] = {}
    while i < len(tokens):
        tok = tokens[i]
        if tok.text == "{":
            depth += 1
        elif tok.text == "}":
            depth -= 1
        elif tok.kind == "id" and tok.text not in KEYWORDS and i + 1 < len(tokens) \
                and tokens[i + 1].text == "(":
            close = match_paren(tokens, i + 1)
            if close == -1:
                raise ParseError("unbalanced parentheses", line=tok.line)
            arity = _call_arity(tokens, i + 1)
            after = tokens[close + 1] if close + 1 < len(tokens) else None
            if depth == 0:
                hit = exec_advice.get((tok.text, arity))
                if hit is not None and after is not None:
                    # find the body brace, tolerating attribute tokens
                    j = close + 1
                    while j < len(tokens) and tokens[j].kind == "id":
                        j += 1
                    if j < len(tokens) and tokens[j].text == "{":
                        body_close = match_brace(tokens, j)
                        idx, a = hit
                        replacement = "{\n" + _indent(a.body) + "\n}"
                        edits.append((tokens[j].start, tokens[body_close].end, replacement))
                        report.counts[idx] += 1
                        i = body_close + 1
                        continue
            else:
                hit = call_advice.get((tok.text, arity))
                if hit is not None and tokens[i - 1].text not in (".", "->"):
                    idx, a = hit
                    edits.append((tok.start, tok.end, _wrapper_name(a)))
                    report.counts[idx] += 1
                    wrappers_used[_wrapper_name(a)] = a
        i += 1

    out = source
    for start, end, replacement in sorted(edits, reverse=True):
        out = out[:start] + replacement + out[end:]
    report.replaced_ranges = sorted((s, e) for s, e, _ in edits)
    report.line_origins = _line_origins(source, edits)

    if wrappers_used:
        decls = []
        defs = []
        tags: list[str] = []
        for name, a in sorted(wrappers_used.items()):
            params = ", ".join(a.signature.params) or "void"
            for m in re.finditer(r"\b(struct|union|enum)\s+([A-Za-z_][A-Za-z0-9_]*)",
                                 " ".join(a.signature.params) + " " + a.signature.return_type):
                tag = f"{m.group(1)} {m.group(2)};"
                if tag not in tags:
                    tags.append(tag)
            decls.append(f"static {a.signature.return_type} {name}({params});")
            defs.append(
                f"static {a.signature.return_type} {name}({params})\n"
                "{\n" + _indent(a.body) + "\n}"
            )
        if not out.endswith("\n"):
            out += "\n"
        prolog = "/* call-advice wrappers */\n" + "\n".join(tags + decls) + "\n\n"
        epilog = "\n" + "\n\n".join(defs) + "\n"
        report.line_origins = (
            [None] * len(prolog.splitlines())
            + report.line_origins
            + [None] * len(epilog.splitlines())
        )
        out = prolog + out + epilog
    return out, report


def _line_origins(source: str, edits) -> list[int | None]:
    """Input line of each output line after applying the byte edits.

    Lines produced by a replacement map to the replacement's first input
    line; the accounting merges edits sharing lines so totals stay exact.
    """
    def line_of(pos: int) -> int:
        return source.count("\n", 0, pos) + 1

    regions: list[list[int]] = []  # [first line, last line, newline delta]
    for start, end, replacement in sorted(edits):
        ls, le = line_of(start), line_of(end)
        delta = replacement.count("\n") - source.count("\n", start, end)
        if regions and ls <= regions[-1][1]:
            regions[-1][1] = max(regions[-1][1], le)
            regions[-1][2] += delta
        else:
            regions.append([ls, le, delta])

    total = len(source.splitlines())
    origins: list[int | None] = []
    cursor = 1
    for ls, le, delta in regions:
        origins.extend(range(cursor, ls))
        origins.extend([ls] * (le - ls + 1 + delta))
        cursor = le + 1
    origins.extend(range(cursor, total + 1))
    return origins


def _indent(body: str) -> str:
    return "\n".join("    " + l if l.strip() else l for l in body.splitlines())


@dataclass
class MergeResult:
    text: str
    line_map: list[tuple[str, int]]  # output line index (0-based) -> (file, line)
    removed_functions: list[str] = field(default_factory=list)
    renamed: dict[str, str] = field(default_factory=dict)

    def origin(self, line: int) -> tuple[str, int]:
        """Original (file, line) for a 1-based merged line number."""
        if 1 <= line <= len(self.line_map):
            return self.line_map[line - 1]
        return ("", line)


def _file_scope_statics(source: str) -> set[str]:
    """Names of file-scope static functions and variables."""
    names: set[str] = set()
    tokens = significant(tokenize(source))
    depth = 0
    stmt_start = 0
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.text == "{":
            close = match_brace(tokens, i)
            if close == -1:
                break
            if depth == 0:
                i = close + 1
                stmt_start = i
                continue
        if tok.text == ";" and depth == 0:
            stmt_start = i + 1
        if depth == 0 and tok.kind == "id" and tok.text not in KEYWORDS:
            window = tokens[stmt_start:i]
            if any(t.text == "static" for t in window):
                nxt = tokens[i + 1].text if i + 1 < len(tokens) else ""
                if nxt in ("(", "=", ";", ",", "["):
                    names.add(tok.text)
        i += 1
    return names


def _rename_identifiers(source: str, renames: dict[str, str]) -> str:
    if not renames:
        return source
    out = []
    last = 0
    for tok in tokenize(source):
        if tok.kind == "id" and tok.text in renames:
            out.append(source[last : tok.start])
            out.append(renames[tok.text])
            last = tok.end
    out.append(source[last:])
    return "".join(out)


_TYPE_BLOCK = re.compile(
    r"^(?:typedef[^;{]*;|(?:struct|union|enum)\s+[A-Za-z_][A-Za-z0-9_]*\s*\{)"
)


def _type_definition_spans(source: str) -> list[tuple[int, int, str]]:
    """(start, end, normalized text) of file-scope type definitions."""
    spans = []
    tokens = significant(tokenize(source))
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind == "id" and tok.text in ("struct", "union", "enum"):
            j = i + 1
            if j < len(tokens) and tokens[j].kind == "id":
                j += 1
            if j < len(tokens) and tokens[j].text == "{":
                close = match_brace(tokens, j)
                if close != -1 and close + 1 < len(tokens) and tokens[close + 1].text == ";":
                    start, end = tok.start, tokens[close + 1].end
                    spans.append((start, end, " ".join(source[start:end].split())))
                    i = close + 2
                    continue
            i = j
            continue
        if tok.kind == "id" and tok.text == "typedef":
            j = i
            while j < len(tokens) and tokens[j].text != ";":
                if tokens[j].text == "{":
                    j = match_brace(tokens, j)
                    if j == -1:
                        break
                j += 1
            if j != -1 and j < len(tokens):
                start, end = tok.start, tokens[j].end
                spans.append((start, end, " ".join(source[start:end].split())))
                i = j + 1
                continue
        if tok.text == "{":
            close = match_brace(tokens, i)
            i = (close if close != -1 else i) + 1
            continue
        i += 1
    return spans


def merge(
    sources,
    names: list[str] | None = None,
    roots: tuple[str, ...] = ("entry_point",),
    prune: bool = True,
) -> MergeResult:
    """Concatenate sources into one translation unit.

    ``sources`` is a list of C texts or (name, text) pairs.  File-scope
    statics are renamed ``name__fN``; byte-identical duplicate type
    definitions after whitespace normalisation are dropped; functions not
    reachable from a defined root (or an advice wrapper) are removed.
    """
    pairs = []
    for k, item in enumerate(sources):
        if isinstance(item, tuple) and len(item) == 3:
            pairs.append(item)
        elif isinstance(item, tuple):
            pairs.append((item[0], item[1], None))
        else:
            pairs.append((names[k] if names else f"file{k}.c", item, None))

    # cross-file duplicate check for non-static definitions
    seen_defs: dict[str, str] = {}
    for fname, text, _origins in pairs:
        syms = extract_symbols(text)
        for fdef in syms.all_definitions:
            if fdef.static:
                continue
            if fdef.name in seen_defs and seen_defs[fdef.name] != fname:
                raise MergeError(
                    f"duplicate non-static definition of {fdef.name!r} "
                    f"in {seen_defs[fdef.name]} and {fname}"
                )
            seen_defs.setdefault(fdef.name, fname)

    out_lines: list[str] = []
    line_map: list[tuple[str, int]] = []
    renamed: dict[str, str] = {}
    seen_types: set[str] = set()
    prototypes: list[str] = []
    tags: list[str] = []
    for index, (fname, text, origins) in enumerate(pairs):
        statics = _file_scope_statics(text)
        renames = {n: f"{n}__f{index}" for n in sorted(statics)}
        for old, new in renames.items():
            renamed[f"{fname}:{old}"] = new
        body = _rename_identifiers(text, renames)

        drops = []
        for start, end, norm in _type_definition_spans(body):
            if norm in seen_types:
                drops.append((start, end))
            else:
                seen_types.add(norm)
        for start, end in sorted(drops, reverse=True):
            removed = body[start:end]
            # keep the line structure so the merged line map stays stable
            body = body[:start] + "\n" * removed.count("\n") + body[end:]

        for fdef in extract_symbols(body).all_definitions:
            if fdef.header and fdef.header + ";" not in prototypes:
                prototypes.append(fdef.header + ";")
                for m in re.finditer(
                    r"\b(struct|union|enum)\s+([A-Za-z_][A-Za-z0-9_]*)", fdef.header
                ):
                    tag = f"{m.group(1)} {m.group(2)};"
                    if tag not in tags:
                        tags.append(tag)

        banner = f"/* ---- {fname} ---- */"
        out_lines.append(banner)
        line_map.append((fname, 0))
        for offset, line in enumerate(body.splitlines(), start=1):
            out_lines.append(line)
            if origins is not None and offset <= len(origins):
                line_map.append((fname, origins[offset - 1] or 0))
            else:
                line_map.append((fname, offset))

    if prototypes:
        head = ["/* forward declarations */"] + tags + prototypes + [""]
        out_lines = head + out_lines
        line_map = [("<declarations>", 0)] * len(head) + line_map

    text = "\n".join(out_lines) + "\n"
    result = MergeResult(text=text, line_map=line_map, renamed=renamed)
    if prune:
        _prune_unreachable(result, roots)
    return result


def _prune_unreachable(result: MergeResult, roots) -> None:
    syms = extract_symbols(result.text)
    wrapper_roots = [n for n in syms.definitions if n.startswith("ldv_call_")]
    live_roots = [r for r in roots if r in syms.definitions] + wrapper_roots
    if not live_roots:
        return
    calls_by_caller: dict[str, set[str]] = {}
    for call in syms.calls:
        calls_by_caller.setdefault(call.caller, set()).add(call.callee)
    reachable: set[str] = set()
    queue = list(live_roots)
    while queue:
        fn = queue.pop()
        if fn in reachable:
            continue
        reachable.add(fn)
        for callee in calls_by_caller.get(fn, ()):
            if callee in syms.definitions and callee not in reachable:
                queue.append(callee)

    lines = result.text.splitlines()
    doomed = sorted(
        (fdef.line, fdef.end_line, name)
        for name, fdef in syms.definitions.items()
        if name not in reachable
    )
    dead_prototypes = {
        syms.definitions[name].header + ";" for _s, _e, name in doomed
    }
    for start, end, name in doomed:
        for ln in range(start - 1, end):
            lines[ln] = ""
        result.removed_functions.append(name)
    for i, (fname, _orig) in enumerate(result.line_map):
        if fname == "<declarations>" and lines[i] in dead_prototypes:
            lines[i] = ""
    result.text = "\n".join(lines) + "\n"

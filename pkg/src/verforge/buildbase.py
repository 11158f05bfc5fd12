"""Build-base ingestion: build commands, callgraph and file graph.

The build base is the structured record of a program that every later stage
consumes: its compile and link commands, the set of C source files and a
function callgraph extracted by a token-level scanner.
"""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass, field
from pathlib import Path

from .ctokens import KEYWORDS, TYPE_STARTERS, Token, match_brace, match_paren, significant, tokenize
from .errors import ConfigError, IntegrityError, ParseError

_CALL_KEYWORDS = KEYWORDS | {"defined"}


@dataclass(frozen=True)
class FunctionDef:
    name: str
    line: int
    end_line: int
    static: bool = False
    header: str = ""  # declaration text up to the closing parameter paren


@dataclass(frozen=True)
class CallSite:
    caller: str
    callee: str
    line: int


@dataclass
class Symbols:
    """Result of scanning one source file."""

    definitions: dict[str, FunctionDef]
    calls: list[CallSite]
    static_flags: dict[str, bool]
    all_definitions: list[FunctionDef] = field(default_factory=list)


@dataclass(frozen=True)
class CompileCommand:
    id: str
    input: str
    output: str
    options: tuple[str, ...] = ()


@dataclass(frozen=True)
class LinkCommand:
    id: str
    inputs: tuple[str, ...]
    output: str
    kind: str = "LD"  # LD | AR


@dataclass(frozen=True)
class Definition:
    file: str
    line: int
    end_line: int


@dataclass
class Callgraph:
    definitions: dict[str, Definition] = field(default_factory=dict)
    calls: list[tuple[str, str, str, int]] = field(default_factory=list)  # caller, callee, file, line
    static_flags: dict[tuple[str, str], bool] = field(default_factory=dict)

    def defining_file(self, name: str) -> str | None:
        d = self.definitions.get(name)
        return d.file if d else None


@dataclass
class BuildBase:
    root_dir: Path
    cc_commands: list[CompileCommand]
    ld_commands: list[LinkCommand]
    source_files: set[str]
    callgraph: Callgraph
    provenance: str = ""

    def read_source(self, path: str) -> str:
        return (self.root_dir / path).read_text()


@dataclass
class FileGraph:
    nodes: set[str]
    weights: dict[tuple[str, str], int]

    @property
    def edges(self) -> set[tuple[str, str, int]]:
        return {(a, b, w) for (a, b), w in self.weights.items()}


def extract_symbols(source: str) -> Symbols:
    """Scan C text for function definitions and the calls they make.

    Token-level only: function pointers, macro-hidden calls and calls through
    members are not resolved.  Preprocessor conditionals are treated as
    always-taken text.
    """
    tokens = significant(tokenize(source))
    definitions: dict[str, FunctionDef] = {}
    all_defs: list[FunctionDef] = []
    calls: list[CallSite] = []
    static_flags: dict[str, bool] = {}

    i = 0
    stmt_start = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.text == "}":
            raise ParseError("unbalanced '}' at file scope", line=tok.line)
        if tok.text == "{":
            # File-scope brace that is not a function body: struct/enum/union
            # definition or an initializer; skip it wholesale.
            close = match_brace(tokens, i)
            if close == -1:
                raise ParseError("unterminated block", line=tok.line)
            i = close + 1
            stmt_start = i
            continue
        if tok.text == ";":
            i += 1
            stmt_start = i
            continue
        if tok.kind == "id" and tok.text not in KEYWORDS and _next_is(tokens, i + 1, "("):
            close = match_paren(tokens, i + 1)
            if close == -1:
                raise ParseError("unterminated parameter list", line=tok.line)
            body_open = _skip_decl_suffix(tokens, close + 1)
            if body_open is not None and tokens[body_open].text == "{":
                body_close = match_brace(tokens, body_open)
                if body_close == -1:
                    raise ParseError("unterminated function body", line=tokens[body_open].line)
                is_static = any(t.text == "static" for t in tokens[stmt_start:i])
                header = source[tokens[stmt_start].start : tokens[close].end]
                fdef = FunctionDef(
                    tok.text, tok.line, tokens[body_close].line, is_static,
                    header=" ".join(header.split()),
                )
                all_defs.append(fdef)
                definitions.setdefault(tok.text, fdef)
                static_flags.setdefault(tok.text, is_static)
                calls.extend(_scan_calls(tokens, tok.text, body_open + 1, body_close))
                i = body_close + 1
                stmt_start = i
                continue
        i += 1

    return Symbols(definitions, calls, static_flags, all_defs)


def _next_is(tokens: list[Token], index: int, text: str) -> bool:
    return index < len(tokens) and tokens[index].text == text


def _skip_decl_suffix(tokens: list[Token], index: int) -> int | None:
    """Skip attribute-ish tokens between a parameter list and ``{``/``;``."""
    i = index
    while i < len(tokens):
        t = tokens[i]
        if t.text in ("{", ";"):
            return i
        if t.kind == "id":
            i += 1
            continue
        if t.text == "(":
            close = match_paren(tokens, i)
            if close == -1:
                return None
            i = close + 1
            continue
        return None
    return None


def _scan_calls(tokens: list[Token], caller: str, start: int, end: int) -> list[CallSite]:
    calls: list[CallSite] = []
    locals_seen: set[str] = set()
    i = start
    stmt_begin = True
    while i < end:
        tok = tokens[i]
        if stmt_begin and tok.kind == "id" and tok.text in TYPE_STARTERS:
            decl_end = i
            while decl_end < end and tokens[decl_end].text not in (";", "{"):
                decl_end += 1
            # Record the declared names but keep scanning the statement so
            # calls inside initializers are still seen.
            locals_seen.update(_declarator_names(tokens[i:decl_end]))
        if (
            tok.kind == "id"
            and tok.text not in _CALL_KEYWORDS
            and tok.text not in locals_seen
            and _next_is(tokens, i + 1, "(")
            and (i == start or tokens[i - 1].text not in (".", "->"))
        ):
            calls.append(CallSite(caller, tok.text, tok.line))
        stmt_begin = tok.text in (";", "{", "}", ":")
        i += 1
    return calls


def _declarator_names(decl_tokens: list[Token]) -> set[str]:
    """Identifier names declared by one local declaration statement."""
    names: set[str] = set()
    segment: list[Token] = []
    depth = 0
    for t in decl_tokens + [Token("punct", ",", 0, 0, 0)]:
        if t.text in ("(", "["):
            depth += 1
        elif t.text in (")", "]"):
            depth -= 1
        if t.text == "," and depth == 0:
            for s in segment:
                if s.text == "=":
                    break
                if s.kind == "id" and s.text not in KEYWORDS:
                    names.add(s.text)
            segment = []
        else:
            segment.append(t)
    return names


def build_file_graph(base: BuildBase) -> FileGraph:
    """File-level call graph: edge (A, B, w) when A's functions make w calls
    to functions defined in B."""
    nodes = {cc.input for cc in base.cc_commands}
    weights: dict[tuple[str, str], int] = {}
    for caller, callee, file, _line in base.callgraph.calls:
        target = base.callgraph.defining_file(callee)
        if target is None or target == file:
            continue
        key = (file, target)
        weights[key] = weights.get(key, 0) + 1
    return FileGraph(nodes, weights)


def ingest_build_base(directory: str | Path) -> BuildBase:
    """Load a build base from ``build_base.json`` or ``compile_commands.json``."""
    directory = Path(directory)
    manifest = directory / "build_base.json"
    ccdb = directory / "compile_commands.json"
    if manifest.exists():
        base = _load_manifest(directory, manifest)
    elif ccdb.exists():
        base = _load_ccdb(directory, ccdb)
    else:
        raise ConfigError(f"no build_base.json or compile_commands.json in {directory}")
    _validate(base)
    _populate_callgraph(base)
    return base


def _load_manifest(directory: Path, manifest: Path) -> BuildBase:
    doc = json.loads(manifest.read_text())
    root = directory / doc.get("root", ".")
    cc = [
        CompileCommand(e["id"], e["in"], e["out"], tuple(e.get("opts", ())))
        for e in doc.get("cc", ())
    ]
    ld = [
        LinkCommand(e["id"], tuple(e["ins"]), e["out"], e.get("kind", "LD"))
        for e in doc.get("ld", ())
    ]
    cc.sort(key=lambda c: (c.input, c.id))
    ld.sort(key=lambda c: (c.output, c.id))
    return BuildBase(
        root_dir=root,
        cc_commands=cc,
        ld_commands=ld,
        source_files={c.input for c in cc},
        callgraph=Callgraph(),
        provenance=f"build_base.json from {directory}",
    )


def _load_ccdb(directory: Path, ccdb: Path) -> BuildBase:
    doc = json.loads(ccdb.read_text())
    cc = []
    for k, entry in enumerate(doc):
        args = entry.get("arguments")
        if args is None:
            args = shlex.split(entry.get("command", ""))
        entry_dir = Path(entry.get("directory", "."))
        if not entry_dir.is_absolute():
            entry_dir = directory / entry_dir
        src = Path(entry["file"])
        if not src.is_absolute():
            src = entry_dir / src
        try:
            rel = src.resolve().relative_to(directory.resolve())
        except ValueError:
            rel = src
        output = None
        opts = []
        skip = False
        for j, a in enumerate(args[1:], start=1):
            if skip:
                skip = False
                continue
            if a == "-o":
                if j + 1 < len(args):
                    output = args[j + 1]
                skip = True
            elif a == entry["file"] or Path(a).name == src.name:
                continue
            else:
                opts.append(a)
        if output is None:
            output = str(Path(rel).with_suffix(".o"))
        cc.append(CompileCommand(f"cc{k}", str(rel), output, tuple(opts)))
    cc.sort(key=lambda c: (c.input, c.id))
    return BuildBase(
        root_dir=directory,
        cc_commands=cc,
        ld_commands=[],
        source_files={c.input for c in cc},
        callgraph=Callgraph(),
        provenance=f"compile_commands.json from {directory}",
    )


def _validate(base: BuildBase) -> None:
    if not base.source_files:
        raise ConfigError("build base declares no compiled source files")
    outputs = {c.output for c in base.cc_commands} | {c.output for c in base.ld_commands}
    seen: set[str] = set()
    for cmd in list(base.cc_commands) + list(base.ld_commands):
        if cmd.output in seen:
            raise IntegrityError(f"duplicate command output: {cmd.output}")
        seen.add(cmd.output)
    for cc in base.cc_commands:
        if not cc.input.endswith(".c"):
            raise IntegrityError(f"compile input is not a C file: {cc.input}")
        if not (base.root_dir / cc.input).exists():
            raise IntegrityError(cc.input)
    for ld in base.ld_commands:
        if not ld.inputs:
            raise IntegrityError(f"link command {ld.id} has no inputs")
        for inp in ld.inputs:
            if inp not in outputs and inp not in base.source_files:
                raise IntegrityError(inp)


def _populate_callgraph(base: BuildBase) -> None:
    graph = Callgraph()
    for path in sorted(base.source_files):
        syms = extract_symbols(base.read_source(path))
        for name, fdef in sorted(syms.definitions.items()):
            if name not in graph.definitions:
                graph.definitions[name] = Definition(path, fdef.line, fdef.end_line)
            graph.static_flags[(path, name)] = fdef.static
        for call in syms.calls:
            graph.calls.append((call.caller, call.callee, path, call.line))
    base.callgraph = graph


def base_to_json(base: BuildBase) -> dict:
    return {
        "root": str(base.root_dir),
        "provenance": base.provenance,
        "cc": [
            {"id": c.id, "in": c.input, "out": c.output, "opts": list(c.options)}
            for c in base.cc_commands
        ],
        "ld": [
            {"id": c.id, "ins": list(c.inputs), "out": c.output, "kind": c.kind}
            for c in base.ld_commands
        ],
        "callgraph": {
            "definitions": {
                n: {"file": d.file, "line": d.line, "end_line": d.end_line}
                for n, d in sorted(base.callgraph.definitions.items())
            },
            "calls": [list(c) for c in base.callgraph.calls],
            "static": [
                {"file": f, "function": n, "static": v}
                for (f, n), v in sorted(base.callgraph.static_flags.items())
            ],
        },
    }


def base_from_json(doc: dict) -> BuildBase:
    graph = Callgraph(
        definitions={
            n: Definition(d["file"], d["line"], d["end_line"])
            for n, d in doc.get("callgraph", {}).get("definitions", {}).items()
        },
        calls=[tuple(c) for c in doc.get("callgraph", {}).get("calls", ())],
        static_flags={
            (e["file"], e["function"]): e["static"]
            for e in doc.get("callgraph", {}).get("static", ())
        },
    )
    cc = [
        CompileCommand(e["id"], e["in"], e["out"], tuple(e.get("opts", ())))
        for e in doc.get("cc", ())
    ]
    return BuildBase(
        root_dir=Path(doc.get("root", ".")),
        cc_commands=cc,
        ld_commands=[
            LinkCommand(e["id"], tuple(e["ins"]), e["out"], e.get("kind", "LD"))
            for e in doc.get("ld", ())
        ],
        source_files={c.input for c in cc},
        callgraph=graph,
        provenance=doc.get("provenance", ""),
    )

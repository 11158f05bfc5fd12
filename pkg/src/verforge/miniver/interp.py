"""Bounded explicit-state exploration of the parsed C subset.

Nondeterminism is enumerated by choice-sequence replay: every run executes
concretely with a prefix of recorded choices; hitting a fresh nondeterministic
point forks one new prefix per value.  Unsafe traces therefore replay
concretely by re-running their choice sequence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ParseError
from .parser import (
    EBinary,
    ECall,
    EId,
    ENum,
    EStr,
    EUnary,
    Program,
    SAssign,
    SDecl,
    SExpr,
    SGoto,
    SIf,
    SIncDec,
    SLabel,
    SReturn,
    SWhile,
    parse_program,
)


@dataclass
class Bounds:
    loop_bound: int = 16
    goto_bound: int = 64
    call_depth: int = 64
    max_steps: int = 200_000
    max_paths: int = 50_000
    nondet_values: tuple[int, ...] = (0, 1)


@dataclass(frozen=True)
class TraceEvent:
    kind: str  # call | return | branch | error | statement
    function: str
    line: int
    text: str = ""


@dataclass
class MiniVerdict:
    kind: str  # Safe | Unsafe | Unknown
    reason: str = ""
    trace: list[TraceEvent] = field(default_factory=list)
    explored_states: int = 0
    choices: tuple[int, ...] = ()


@dataclass
class CheckResult:
    verdict: MiniVerdict
    witness: str | None
    coverage: dict


class _NeedChoice(Exception):
    def __init__(self, values):
        self.values = values


class _Prune(Exception):
    pass


class _ErrorHit(Exception):
    pass


class _BoundHit(Exception):
    def __init__(self, why: str):
        self.why = why


class _Return(Exception):
    def __init__(self, value: int):
        self.value = value


class _Goto(Exception):
    def __init__(self, label: str, line: int):
        self.label = label
        self.line = line


class _SubsetViolation(Exception):
    pass


_ERROR_BUILTINS = frozenset({"__VERIFIER_error", "ldv_assert", "reach_error"})
_ASSUME_BUILTINS = frozenset({"__VERIFIER_assume", "ldv_assume"})
_FRESH_BUILTINS = frozenset(
    {"malloc", "calloc", "kzalloc", "external_allocated_data", "ldv_malloc"}
)
_POINTER_NONDET = frozenset(
    {"__VERIFIER_nondet_pointer", "ldv_undef_ptr", "external_nondet_pointer"}
)


def _is_nondet_int(name: str) -> bool:
    return (
        name.startswith("__VERIFIER_nondet_") and name not in _POINTER_NONDET
    ) or name in ("ldv_undef_int", "ldv_undef_uint")


class _Run:
    """One concrete execution driven by a choice prefix."""

    def __init__(self, program: Program, bounds: Bounds, choices: tuple[int, ...]):
        self.program = program
        self.bounds = bounds
        self.choices = choices
        self.taken = 0
        self.globals: dict[str, int] = {}
        self.trace: list[TraceEvent] = []
        self.lines: set[int] = set()
        self.steps = 0
        self.gotos = 0
        self.fresh = 0x10000
        self.stack: list[str] = []
        self.bound_reason = ""

    def choose(self, values) -> int:
        if self.taken < len(self.choices):
            value = self.choices[self.taken]
            self.taken += 1
            return value
        raise _NeedChoice(tuple(values))

    def fresh_pointer(self) -> int:
        self.fresh += 0x1000
        return self.fresh

    def step(self, line: int):
        self.steps += 1
        self.lines.add(line)
        if self.steps > self.bounds.max_steps:
            raise _BoundHit("step budget exhausted")

    def event(self, kind: str, line: int, text: str = ""):
        fn = self.stack[-1] if self.stack else ""
        self.trace.append(TraceEvent(kind, fn, line, text))

    def execute(self, entry: str) -> None:
        for name, init, line in self.program.globals:
            self.stack.append("")
            self.globals[name] = 0 if init is None else self.eval(init, {})
            self.lines.add(line)
            self.event("statement", line)
            self.stack.pop()
        self.call(entry, [], self.program.functions[entry].line)

    def call(self, name: str, args: list[int], call_line: int) -> int:
        fn = self.program.functions[name]
        if len(self.stack) >= self.bounds.call_depth:
            raise _BoundHit("call depth exceeded")
        self.stack.append(name)
        self.lines.add(fn.line)
        self.event("call", fn.line, text=name)
        frame = dict(zip(fn.params, args))
        for extra in fn.params[len(args):]:
            frame[extra] = 0
        value = 0
        try:
            self.exec_body(fn.body, frame)
        except _Return as ret:
            value = ret.value
        self.lines.add(fn.end_line)
        self.event("return", fn.end_line, text=name)
        self.stack.pop()
        return value

    def exec_body(self, body: list, frame: dict) -> None:
        labels = {s.name: i for i, s in enumerate(body) if isinstance(s, SLabel)}
        pc = 0
        while pc < len(body):
            try:
                self.exec_stmt(body[pc], frame)
            except _Goto as g:
                if g.label not in labels:
                    raise _SubsetViolation(
                        f"goto target {g.label!r} is not a function-level label"
                    )
                self.gotos += 1
                if self.gotos > self.bounds.goto_bound:
                    raise _BoundHit("goto bound exceeded")
                pc = labels[g.label]
                continue
            pc += 1

    def exec_stmt(self, stmt, frame: dict) -> None:
        if isinstance(stmt, SLabel):
            return
        self.step(stmt.line)
        if isinstance(stmt, SDecl):
            frame[stmt.name] = 0 if stmt.init is None else self.eval(stmt.init, frame)
            self.event("statement", stmt.line)
        elif isinstance(stmt, SAssign):
            value = self.eval(stmt.value, frame)
            store = frame if stmt.name in frame else self.globals
            if stmt.op == "+=":
                store[stmt.name] = store.get(stmt.name, 0) + value
            elif stmt.op == "-=":
                store[stmt.name] = store.get(stmt.name, 0) - value
            else:
                store[stmt.name] = value
            self.event("statement", stmt.line)
        elif isinstance(stmt, SIncDec):
            store = frame if stmt.name in frame else self.globals
            delta = 1 if stmt.op == "++" else -1
            store[stmt.name] = store.get(stmt.name, 0) + delta
            self.event("statement", stmt.line)
        elif isinstance(stmt, SExpr):
            if isinstance(stmt.expr, ECall):
                self.eval_call(stmt.expr, frame, value_needed=False)
            else:
                self.eval(stmt.expr, frame)
            self.event("statement", stmt.line)
        elif isinstance(stmt, SIf):
            cond = self.eval(stmt.cond, frame)
            self.event("branch", stmt.line, text="true" if cond else "false")
            for s in stmt.then if cond else stmt.orelse:
                self.exec_stmt(s, frame)
        elif isinstance(stmt, SWhile):
            iterations = 0
            while True:
                cond = self.eval(stmt.cond, frame)
                self.event("branch", stmt.line, text="true" if cond else "false")
                if not cond:
                    break
                iterations += 1
                if iterations > self.bounds.loop_bound:
                    raise _BoundHit("loop bound exceeded")
                for s in stmt.body:
                    self.exec_stmt(s, frame)
        elif isinstance(stmt, SReturn):
            value = 0 if stmt.value is None else self.eval(stmt.value, frame)
            self.event("statement", stmt.line)
            raise _Return(value)
        elif isinstance(stmt, SGoto):
            self.event("statement", stmt.line)
            raise _Goto(stmt.label, stmt.line)
        else:
            raise _SubsetViolation(f"unsupported statement {stmt!r}")

    def eval(self, expr, frame: dict) -> int:
        if isinstance(expr, ENum):
            return expr.value
        if isinstance(expr, EStr):
            return self.fresh_pointer()
        if isinstance(expr, EId):
            if expr.name in frame:
                return frame[expr.name]
            if expr.name in self.globals:
                return self.globals[expr.name]
            raise _SubsetViolation(f"read of unknown identifier {expr.name!r}")
        if isinstance(expr, EUnary):
            if expr.op == "cast":
                return self.eval(expr.operand, frame)
            v = self.eval(expr.operand, frame)
            return {"!": lambda: int(not v), "-": lambda: -v, "+": lambda: v,
                    "~": lambda: ~v}[expr.op]()
        if isinstance(expr, EBinary):
            if expr.op == "&&":
                return int(bool(self.eval(expr.left, frame)) and
                           bool(self.eval(expr.right, frame)))
            if expr.op == "||":
                return int(bool(self.eval(expr.left, frame)) or
                           bool(self.eval(expr.right, frame)))
            a = self.eval(expr.left, frame)
            b = self.eval(expr.right, frame)
            try:
                return {
                    "+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                    "/": lambda: int(a / b) if b else 0,
                    "%": lambda: a - int(a / b) * b if b else 0,
                    "==": lambda: int(a == b), "!=": lambda: int(a != b),
                    "<": lambda: int(a < b), ">": lambda: int(a > b),
                    "<=": lambda: int(a <= b), ">=": lambda: int(a >= b),
                    "&": lambda: a & b, "|": lambda: a | b, "^": lambda: a ^ b,
                    "<<": lambda: a << b, ">>": lambda: a >> b,
                }[expr.op]()
            except KeyError:
                raise _SubsetViolation(f"unsupported operator {expr.op!r}")
        if isinstance(expr, ECall):
            return self.eval_call(expr, frame, value_needed=True)
        raise _SubsetViolation(f"unsupported expression {expr!r}")

    def eval_call(self, call: ECall, frame: dict, value_needed: bool) -> int:
        if call.name in self.program.functions:
            args = [self.eval(a, frame) for a in call.args]
            self.event("statement", call.line)
            return self.call(call.name, args, call.line)
        if call.name in _ERROR_BUILTINS:
            self.event("error", call.line, text=call.name)
            raise _ErrorHit()
        if call.name in _ASSUME_BUILTINS:
            value = self.eval(call.args[0], frame) if call.args else 0
            if not value:
                raise _Prune()
            return value
        if _is_nondet_int(call.name):
            value = self.choose(self.bounds.nondet_values)
            self.event("branch", call.line, text=f"{call.name}() == {value}")
            return value
        if call.name in _POINTER_NONDET:
            value = self.choose((0, self.fresh_pointer()))
            self.event(
                "branch", call.line,
                text=f"{call.name}() {'== 0' if value == 0 else '!= 0'}",
            )
            return value
        if call.name in _FRESH_BUILTINS:
            for a in call.args:
                self.eval(a, frame)
            return self.fresh_pointer()
        # Undefined function: no-op as a statement, nondeterministic value
        # when the result is consumed.
        for a in call.args:
            self.eval(a, frame)
        if not value_needed:
            return 0
        value = self.choose(self.bounds.nondet_values)
        self.event("branch", call.line, text=f"{call.name}() == {value}")
        return value


def _iterate_runs(program: Program, entry: str, bounds: Bounds):
    """Depth-first enumeration of concrete runs by choice-sequence replay.

    Yields (status, run) pairs with status in completed | pruned | bound |
    error | forked; forked runs only contribute coverage.  Subset violations
    propagate to the caller.
    """
    pending: list[tuple[int, ...]] = [()]
    while pending:
        prefix = pending.pop()
        run = _Run(program, bounds, prefix)
        try:
            run.execute(entry)
            yield "completed", run
        except _NeedChoice as fork:
            for value in reversed(fork.values):
                pending.append(prefix + (value,))
            yield "forked", run
        except _Prune:
            yield "pruned", run
        except _BoundHit as hit:
            run.bound_reason = hit.why
            yield "bound", run
        except RecursionError:
            run.bound_reason = "recursion limit"
            yield "bound", run
        except _ErrorHit:
            yield "error", run


def explore(program_text: str, entry: str, bounds: Bounds | None = None):
    """Every terminal run of the program: (status, trace, choices) records.

    Unlike :func:`check` this does not stop at the first error; it is the
    exhaustive oracle used by the translator's trace-equivalence tests.
    """
    bounds = bounds or Bounds()
    program = parse_program(program_text)
    out = []
    for status, run in _iterate_runs(program, entry, bounds):
        if status == "forked":
            continue
        out.append((status, list(run.trace), tuple(run.choices[: run.taken])))
        if len(out) > bounds.max_paths:
            raise _SubsetViolation("path budget exhausted during exploration")
    return out


_REACHABILITY_RE = re.compile(
    r"^\s*CHECK\(\s*init\(\s*(\w+)\s*\(\s*\)\s*\)\s*,\s*"
    r"LTL\(\s*G\s*!\s*call\(\s*__VERIFIER_error\s*\(\s*\)\s*\)\s*\)\s*\)\s*$"
)


def parse_property(text: str) -> str | None:
    """Entry-point name of a reachability property, None when unsupported."""
    lines = [l for l in text.splitlines() if l.strip()]
    if len(lines) != 1:
        return None
    m = _REACHABILITY_RE.match(lines[0])
    return m.group(1) if m else None


def check(
    program_text: str,
    property_text: str,
    bounds: Bounds | None = None,
    filename: str = "cil.i",
) -> CheckResult:
    """Explore a program exhaustively and decide the reachability property."""
    bounds = bounds or Bounds()
    entry = parse_property(property_text)
    if entry is None:
        return CheckResult(
            MiniVerdict("Unknown", reason="unsupported: only the error-call "
                        "reachability property is decided"),
            None, {},
        )
    try:
        program = parse_program(program_text)
    except ParseError as exc:
        return CheckResult(
            MiniVerdict("Unknown", reason=f"tool-failure: {exc}"), None, {}
        )
    if entry not in program.functions:
        return CheckResult(
            MiniVerdict("Unknown", reason=f"tool-failure: entry function "
                        f"{entry!r} is not defined"),
            None, {},
        )

    covered: set[int] = set()
    explored = 0
    bounds_hit: str | None = None
    error_run: _Run | None = None
    try:
        for status, run in _iterate_runs(program, entry, bounds):
            covered |= run.lines
            if status == "forked":
                continue
            explored += 1
            if status == "bound":
                bounds_hit = run.bound_reason
            elif status == "error":
                error_run = run
                break
            if explored > bounds.max_paths:
                bounds_hit = "path budget exhausted"
                break
    except _SubsetViolation as exc:
        return CheckResult(
            MiniVerdict("Unknown", reason=f"tool-failure: {exc}",
                        explored_states=explored),
            None,
            _coverage_doc(filename, covered, program_text),
        )

    coverage = _coverage_doc(filename, covered, program_text)
    if error_run is not None:
        verdict = MiniVerdict(
            "Unsafe",
            trace=[e for e in error_run.trace
                   if e.kind in ("call", "return", "branch", "error")],
            explored_states=explored,
            choices=tuple(error_run.choices[: error_run.taken]),
        )
        witness = emit_witness(error_run.trace, filename)
        return CheckResult(verdict, witness, coverage)
    if bounds_hit:
        return CheckResult(
            MiniVerdict("Unknown", reason=f"timeout: {bounds_hit}",
                        explored_states=explored),
            None, coverage,
        )
    return CheckResult(
        MiniVerdict("Safe", explored_states=explored), None, coverage
    )


def replay(program_text: str, entry: str, choices: tuple[int, ...],
           bounds: Bounds | None = None) -> str:
    """Re-execute one path concretely; reports how it terminated."""
    run = _Run(parse_program(program_text), bounds or Bounds(), choices)
    try:
        run.execute(entry)
        return "completed"
    except _ErrorHit:
        return "error"
    except _Prune:
        return "pruned"
    except (_NeedChoice, _BoundHit):
        return "incomplete"


def _coverage_doc(filename: str, covered: set[int], program_text: str) -> dict:
    return {
        filename: {
            "covered": sorted(covered),
            "total_lines": program_text.count("\n") + 1,
        }
    }


def emit_witness(trace: list[TraceEvent], filename: str) -> str:
    """GraphML violation witness with standard keys only."""
    from xml.sax.saxutils import escape

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="entry" for="node" attr.name="isEntryNode" attr.type="boolean"/>',
        '  <key id="violation" for="node" attr.name="isViolationNode" attr.type="boolean"/>',
        '  <key id="startline" for="edge" attr.name="startline" attr.type="int"/>',
        '  <key id="enterFunction" for="edge" attr.name="enterFunction" attr.type="string"/>',
        '  <key id="returnFrom" for="edge" attr.name="returnFrom" attr.type="string"/>',
        '  <key id="assumption" for="edge" attr.name="assumption" attr.type="string"/>',
        '  <key id="originfile" for="edge" attr.name="originFileName" attr.type="string"/>',
        '  <graph edgedefault="directed">',
        '    <node id="N0"><data key="entry">true</data></node>',
    ]
    events = [e for e in trace if e.kind in ("call", "return", "branch", "error",
                                             "statement")]
    for i, event in enumerate(events, start=1):
        if event.kind == "error":
            lines.append(f'    <node id="N{i}"><data key="violation">true</data></node>')
        else:
            lines.append(f'    <node id="N{i}"/>')
        data = [f'<data key="startline">{event.line}</data>',
                f'<data key="originfile">{escape(filename)}</data>']
        if event.kind == "call":
            data.append(f'<data key="enterFunction">{escape(event.text)}</data>')
        elif event.kind == "return":
            data.append(f'<data key="returnFrom">{escape(event.text)}</data>')
        elif event.kind == "branch":
            data.append(f'<data key="assumption">{escape(event.text)}</data>')
        elif event.kind == "error":
            data.append(f'<data key="enterFunction">{escape(event.text or "__VERIFIER_error")}</data>')
        lines.append(f'    <edge source="N{i-1}" target="N{i}">' +
                     "".join(data) + "</edge>")
    lines.append("  </graph>")
    lines.append("</graphml>")
    return "\n".join(lines) + "\n"

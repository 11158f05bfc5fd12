"""Sequential translation of intermediate models to C harness sources.

Each scenario model becomes one control function; labels become locals,
choices become nondeterministic branches, jumps become labelled blocks with
generated gotos, and signal dispatches become direct calls of the paired
receivers' control functions.  An ``entry_point`` function invokes the
thread-model control functions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import TranslationError
from .model import (
    LABEL_REF,
    Block,
    IntermediateModel,
    Jump,
    Receive,
    ScenarioModel,
    Send,
    pair_signals,
    send_target_models,
)
from .process import BlockRef, Choice, JumpRef, ProcessExpr, ReceiveRef, Seq, SendRef


@dataclass
class TranslationOptions:
    entry_point: str = "entry_point"
    nondet_function: str = "__VERIFIER_nondet_int"
    assume_function: str = "ldv_assume"
    check_final_state: bool = False
    trace_markers: bool = False

    @classmethod
    def from_document(cls, doc: dict) -> "TranslationOptions":
        return cls(
            entry_point=doc.get("entry point", "entry_point"),
            check_final_state=doc.get("check final state", False),
            trace_markers=doc.get("trace markers", False),
        )


@dataclass
class HarnessBundle:
    main_source: str
    aspects: dict[str, str] = field(default_factory=dict)
    markers: dict[str, tuple[str, str]] = field(default_factory=dict)  # fn -> (model, action)
    control_functions: dict[str, str] = field(default_factory=dict)
    entry_point: str = "entry_point"
    supplementary: list[tuple[str, str]] = field(default_factory=list)


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


def _check_restrictions(scenario: ScenarioModel) -> None:
    """Receives may occur only as the first action, sends only as the last."""
    seen: set[tuple[str, bool, bool]] = set()

    def walk(expr: ProcessExpr, is_first: bool, is_last: bool):
        if isinstance(expr, Seq):
            last = len(expr.children) - 1
            for i, child in enumerate(expr.children):
                walk(child, is_first and i == 0, is_last and i == last)
        elif isinstance(expr, Choice):
            for child in expr.children:
                walk(child, is_first, is_last)
        elif isinstance(expr, ReceiveRef):
            if not is_first:
                raise TranslationError(
                    f"scenario {scenario.name!r}: receive {expr.name!r} is not the first action"
                )
        elif isinstance(expr, SendRef):
            if not is_last:
                raise TranslationError(
                    f"scenario {scenario.name!r}: send {expr.name!r} is not the last action"
                )
        elif isinstance(expr, JumpRef):
            key = (expr.name, is_first, True)
            if key in seen:
                return
            seen.add(key)
            # the jump body replaces the remaining transition relation, so
            # its tail is the model's tail
            walk(scenario.actions[expr.name].body, is_first, True)

    walk(scenario.process, True, True)


class _Emitter:
    def __init__(self):
        self.lines: list[str] = []
        self.depth = 1

    def emit(self, text: str = ""):
        self.lines.append(("    " * self.depth + text).rstrip())


def translate(
    model: IntermediateModel,
    fragment=None,
    options: TranslationOptions | None = None,
) -> HarnessBundle:
    """Generate the environment C source and aspect bindings for a model."""
    opts = options or TranslationOptions()
    pairing = pair_signals(model)
    targets = send_target_models(model)

    control: dict[str, str] = {}
    for name, _scenario in model.scenario_models():
        control[name] = f"ldv_emg_{_sanitize(name)}"

    bundle = HarnessBundle(main_source="", entry_point=opts.entry_point)
    bundle.control_functions = control
    marker_count = [0]

    chunks: list[str] = []
    frag_name = getattr(fragment, "name", fragment) or "fragment"
    chunks.append(f"/* Environment model for {frag_name}. */")

    for sname, stext in model.supplementary_sources:
        chunks.append(f"/* Supplementary model source: {sname} */")
        chunks.append(stext.rstrip())
    bundle.supplementary = list(model.supplementary_sources)

    prototypes: list[str] = []
    bodies: list[str] = []
    for name, scenario in model.scenario_models():
        _check_restrictions(scenario)
        decl, body = _control_function(
            name, scenario, model, pairing, targets, control, opts, bundle, marker_count
        )
        prototypes.append(decl + ";")
        bodies.append(body)

    entry_body = _entry_point(model, targets, control, opts)
    bodies.append(entry_body)

    if bundle.markers:
        chunks.append(
            "\n".join(f"void {m}(void) {{ }}" for m in bundle.markers)
        )
    chunks.append("\n".join(prototypes))
    chunks.extend(bodies)
    bundle.main_source = "\n\n".join(chunks) + "\n"

    for name, scenario in model.function_models.items():
        bundle.aspects[f"{_sanitize(name)}.aspect"] = _binding_aspect(
            name, scenario, control[name]
        )
    return bundle


def _first_receive(scenario: ScenarioModel) -> Receive | None:
    from .process import first_leaf

    leaf = first_leaf(scenario.process)
    if isinstance(leaf, ReceiveRef):
        action = scenario.actions[leaf.name]
        if isinstance(action, Receive):
            return action
    return None


def _control_function(
    name, scenario, model, pairing, targets, control, opts, bundle, marker_count
):
    recv = _first_receive(scenario)
    params: list[str] = []
    param_labels: set[str] = set()
    if recv is not None and recv.params:
        dispatched = scenario.kind == "function" or name in targets
        if not dispatched:
            raise TranslationError(
                f"scenario {name!r} starts from the entry point but its first "
                f"receive carries parameters"
            )
        for p in recv.params:
            params.append(scenario.labels[p].declaration)
            param_labels.add(p)

    subst = {lname: label.variable for lname, label in scenario.labels.items()}
    decl = f"void {control[name]}({', '.join(params) or 'void'})"
    em = _Emitter()
    for lname, label in scenario.labels.items():
        if lname not in param_labels:
            em.emit(f"{label.declaration};")
    for lname, label in scenario.labels.items():
        if label.value is not None and lname not in param_labels:
            em.emit(f"{label.variable} = {_substitute(label.value, subst, name)};")

    jumps_needed: dict[str, str] = {}

    def marker(action_name: str) -> str | None:
        if not opts.trace_markers:
            return None
        fn = f"ldv_emg_mark_{marker_count[0]}"
        marker_count[0] += 1
        bundle.markers[fn] = (name, action_name)
        return fn

    def assume(cond: str) -> str:
        return f"{opts.assume_function}({cond});"

    def lower_action(leaf, em: _Emitter):
        action = scenario.actions[leaf.name]
        if action.comment:
            em.emit(f"/* NOTE {action.comment} */")
        if isinstance(action, Block):
            m = marker(action.name)
            if m:
                em.emit(f"{m}();")
            if action.condition:
                em.emit(assume(_substitute(action.condition, subst, name)))
            for stmt in action.statements:
                em.emit(_substitute(stmt, subst, name))
        elif isinstance(action, Receive):
            m = marker(action.name)
            if m:
                em.emit(f"{m}();")
            if action.condition:
                em.emit(assume(_substitute(action.condition, subst, name)))
            if action.postcondition:
                em.emit(assume(_substitute(action.postcondition, subst, name)))
        elif isinstance(action, Send):
            if action.condition:
                em.emit(assume(_substitute(action.condition, subst, name)))
            m = marker(action.name)
            if m:
                em.emit(f"{m}();")
            receivers = pairing.receivers_of(name, action.name)
            args = ", ".join(subst[p] for p in action.params)
            for rmodel, _raction in receivers:
                em.emit(f"{control[rmodel]}({args});")
            if not receivers:
                em.emit(f"/* signal {action.signal!r} has no receiver */")

    def lower(expr: ProcessExpr, em: _Emitter):
        if isinstance(expr, Seq):
            for child in expr.children:
                lower(child, em)
        elif isinstance(expr, Choice):
            for i, child in enumerate(expr.children):
                last = i == len(expr.children) - 1
                if i == 0:
                    em.emit(f"if ({opts.nondet_function}()) {{")
                elif not last:
                    em.emit(f"}} else if ({opts.nondet_function}()) {{")
                else:
                    em.emit("} else {")
                em.depth += 1
                lower(child, em)
                em.depth -= 1
            em.emit("}")
        elif isinstance(expr, JumpRef):
            action = scenario.actions[expr.name]
            if action.comment:
                em.emit(f"/* NOTE {action.comment} */")
            label = f"ldv_emg_jump_{_sanitize(name)}_{_sanitize(expr.name)}"
            jumps_needed.setdefault(expr.name, label)
            em.emit(f"goto {label};")
        else:
            lower_action(expr, em)

    lower(scenario.process, em)

    end_label = f"ldv_emg_end_{_sanitize(name)}"
    if jumps_needed:
        em.emit(f"goto {end_label};")
        emitted_jumps: set[str] = set()
        while set(jumps_needed) - emitted_jumps:
            for jname in sorted(set(jumps_needed) - emitted_jumps):
                emitted_jumps.add(jname)
                em.emit(f"{jumps_needed[jname]}: ;")
                lower(scenario.actions[jname].body, em)
                em.emit(f"goto {end_label};")
        em.emit(f"{end_label}: ;")

    body = decl + "\n{\n" + "\n".join(em.lines) + "\n}"
    return decl, body


def _substitute(text: str, subst: dict[str, str], scenario_name: str) -> str:
    def repl(m):
        ref = m.group(1)
        if ref not in subst:
            raise TranslationError(
                f"unsubstituted %{ref}% in scenario {scenario_name!r}"
            )
        return subst[ref]

    out = LABEL_REF.sub(repl, text)
    return out


def _entry_point(model, targets, control, opts) -> str:
    started = [n for n in model.thread_models if n not in targets]
    em = _Emitter()
    em.emit("/* NOTE Begin environment scenarios */")

    def perm(rest: list[str]):
        if len(rest) == 1:
            em.emit(f"{control[rest[0]]}();")
            return
        for i, pick in enumerate(rest):
            last = i == len(rest) - 1
            if i == 0:
                em.emit(f"if ({opts.nondet_function}()) {{")
            elif not last:
                em.emit(f"}} else if ({opts.nondet_function}()) {{")
            else:
                em.emit("} else {")
            em.depth += 1
            em.emit(f"{control[pick]}();")
            perm([r for r in rest if r != pick])
            em.depth -= 1
        em.emit("}")

    if started:
        if model.entry_order == "random" and len(started) > 1:
            perm(started)
        else:
            for name in started:
                em.emit(f"{control[name]}();")
    if opts.check_final_state:
        em.emit("/* NOTE Check the final state of requirement models */")
        em.emit("ldv_check_final_state();")
    return f"void {opts.entry_point}(void)\n{{\n" + "\n".join(em.lines) + "\n}"


def _binding_aspect(name: str, scenario: ScenarioModel, control_fn: str) -> str:
    recv = _first_receive(scenario)
    params = [scenario.labels[p].declaration for p in recv.params] if recv else []
    arg_names = [scenario.labels[p].variable for p in recv.params] if recv else []
    declaration = scenario.declaration or f"void {name}({', '.join(params) or 'void'})"
    call = f"{control_fn}({', '.join(arg_names)});"
    return (
        f"/* Bind {name}() to its control function. */\n"
        f"around: call({declaration}) {{\n"
        f"    {call}\n"
        f"}}\n"
    )

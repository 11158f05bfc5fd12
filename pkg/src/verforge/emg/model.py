"""Intermediate environment models: labels, actions and transition order.

A scenario model is a small transition system.  Labels are its local
variables, actions are base blocks, signal sends/receives and jumps, and the
``process`` entry fixes the order in which they may happen.  Scenario models
synchronise pairwise over equally named signals (rendezvous).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import SemanticError, SignalTypeError
from .process import (
    BlockRef,
    Choice,
    JumpRef,
    ProcessExpr,
    ReceiveRef,
    Seq,
    SendRef,
    leaves,
    parse_process,
)

LABEL_REF = re.compile(r"%([A-Za-z_][A-Za-z0-9_]*)%")
_DECL_NAME = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*(?:\[[^\]]*\])?\s*$")


@dataclass
class Label:
    name: str
    declaration: str  # C declaration text, e.g. "struct tty_driver *driver"
    value: str | None = None  # optional C initializer expression

    @property
    def variable(self) -> str:
        m = _DECL_NAME.search(self.declaration.split("=")[0].strip())
        if not m:
            raise SemanticError(f"cannot find the declared name in {self.declaration!r}")
        return m.group(1)

    @property
    def type_text(self) -> str:
        """Declaration with the declared name removed, whitespace-normalised."""
        head = self.declaration.split("=")[0].strip()
        m = _DECL_NAME.search(head)
        stripped = head[: m.start(1)] + head[m.end(1):] if m else head
        return " ".join(stripped.replace("*", " * ").split())


@dataclass
class Block:
    name: str
    statements: list[str] = field(default_factory=list)
    condition: str | None = None
    comment: str = ""

    kind = "block"


@dataclass
class Receive:
    name: str
    signal: str = ""
    params: list[str] = field(default_factory=list)  # label names
    condition: str | None = None
    postcondition: str | None = None
    first: bool = False
    comment: str = ""

    kind = "receive"


@dataclass
class Send:
    name: str
    signal: str = ""
    params: list[str] = field(default_factory=list)
    condition: str | None = None
    comment: str = ""

    kind = "send"


@dataclass
class Jump:
    name: str
    body: ProcessExpr = None
    comment: str = ""

    kind = "jump"


Action = Block | Receive | Send | Jump


@dataclass
class ScenarioModel:
    name: str
    labels: dict[str, Label] = field(default_factory=dict)
    actions: dict[str, Action] = field(default_factory=dict)
    process: ProcessExpr = None
    category: str = ""
    kind: str = "thread"  # thread | function
    declaration: str | None = None  # C declaration of the modelled function

    def referenced_actions(self):
        seen: set[str] = set()
        stack = [self.process]
        while stack:
            for leaf in leaves(stack.pop()):
                if leaf.name in seen:
                    continue
                seen.add(leaf.name)
                action = self.actions.get(leaf.name)
                if isinstance(action, Jump) and action.body is not None:
                    stack.append(action.body)
        return seen


@dataclass
class IntermediateModel:
    supplementary_sources: list[tuple[str, str]] = field(default_factory=list)  # (name, C text)
    function_models: dict[str, ScenarioModel] = field(default_factory=dict)
    thread_models: dict[str, ScenarioModel] = field(default_factory=dict)
    entry_order: str = "random"  # random | sequence
    warnings: list[str] = field(default_factory=list)

    def scenario_models(self):
        yield from self.thread_models.items()
        yield from self.function_models.items()


@dataclass
class SignalPairing:
    pairs: list[tuple[str, str, str, str]] = field(default_factory=list)
    # (sender model, send action, receiver model, receive action)
    warnings: list[str] = field(default_factory=list)

    def receivers_of(self, model: str, action: str):
        return [(rm, ra) for sm, sa, rm, ra in self.pairs if sm == model and sa == action]


_RESERVED_KEYS = {"sources", "entry order"}


def parse_model(doc: dict) -> IntermediateModel:
    """Build a validated model from its JSON document.

    Each non-reserved top-level key names one scenario model with ``labels``,
    ``actions`` and ``process`` entries; jump actions carry their own
    ``process``.  The reserved key ``sources`` holds supplementary C texts.
    """
    model = IntermediateModel()
    sources = doc.get("sources", {})
    if isinstance(sources, dict):
        model.supplementary_sources = sorted(sources.items())
    else:
        model.supplementary_sources = [(f"model{i}.c", t) for i, t in enumerate(sources)]
    model.entry_order = doc.get("entry order", "random")

    for name, entry in doc.items():
        if name in _RESERVED_KEYS:
            continue
        scenario = _parse_scenario(name, entry)
        if scenario.kind == "function":
            model.function_models[name] = scenario
        else:
            model.thread_models[name] = scenario
    validate_model(model)
    return model


def _parse_scenario(name: str, entry: dict) -> ScenarioModel:
    scenario = ScenarioModel(
        name=name,
        category=entry.get("category", name.split("/")[0] if "/" in name else ""),
        kind=entry.get("kind", "thread"),
        declaration=entry.get("declaration"),
    )
    for label_name, label_entry in entry.get("labels", {}).items():
        scenario.labels[label_name] = Label(
            label_name,
            label_entry["declaration"],
            label_entry.get("value"),
        )
    scenario.process = parse_process(entry["process"])

    kinds: dict[str, type] = {}
    first_receives: set[str] = set()
    queue = [scenario.process]
    raw_actions = entry.get("actions", {})
    visited_jumps: set[str] = set()
    while queue:
        for leaf in leaves(queue.pop()):
            cls = {
                BlockRef: Block, ReceiveRef: Receive,
                SendRef: Send, JumpRef: Jump,
            }[type(leaf)]
            prev = kinds.setdefault(leaf.name, cls)
            if prev is not cls:
                raise SemanticError(
                    f"action {leaf.name!r} used both as {prev.__name__} and {cls.__name__}"
                )
            if isinstance(leaf, ReceiveRef) and leaf.first:
                first_receives.add(leaf.name)
            if cls is Jump and leaf.name not in visited_jumps:
                visited_jumps.add(leaf.name)
                jump_entry = raw_actions.get(leaf.name)
                if jump_entry is None or "process" not in jump_entry:
                    raise SemanticError(
                        f"jump action {leaf.name!r} has no process entry"
                    )
                queue.append(parse_process(jump_entry["process"]))

    for action_name, cls in kinds.items():
        raw = raw_actions.get(action_name)
        if raw is None:
            raise SemanticError(f"action {action_name!r} is not declared")
        scenario.actions[action_name] = _build_action(action_name, cls, raw, first_receives)
    return scenario


def _single_text(value) -> str | None:
    if value is None:
        return None
    if isinstance(value, str):
        return value
    return " && ".join(value) if len(value) > 1 else (value[0] if value else None)


def _build_action(name: str, cls, raw: dict, first_receives: set[str]) -> Action:
    comment = raw.get("comment", "")
    if cls is Block:
        return Block(
            name,
            statements=list(raw.get("statements", ())),
            condition=_single_text(raw.get("condition")),
            comment=comment,
        )
    if cls is Receive:
        return Receive(
            name,
            signal=name,
            params=list(raw.get("parameters", ())),
            condition=_single_text(raw.get("condition")),
            postcondition=_single_text(raw.get("postcondition")),
            first=name in first_receives,
            comment=comment,
        )
    if cls is Send:
        if "postcondition" in raw:
            raise SemanticError(f"sending action {name!r} cannot have a postcondition")
        return Send(
            name,
            signal=name,
            params=list(raw.get("parameters", ())),
            condition=_single_text(raw.get("condition")),
            comment=comment,
        )
    return Jump(name, body=parse_process(raw["process"]), comment=comment)


_FORBIDDEN_IN_BLOCK = re.compile(r"(?:^|[^A-Za-z0-9_])goto(?:$|[^A-Za-z0-9_])")
_LABEL_DEF = re.compile(r"^\s*[A-Za-z_][A-Za-z0-9_]*\s*:(?!:)")


def _check_block_statement(scenario: str, action: str, stmt: str) -> None:
    from ..ctokens import TYPE_STARTERS

    if _FORBIDDEN_IN_BLOCK.search(stmt):
        raise SemanticError(f"goto is forbidden in base block {scenario}:{action}")
    if _LABEL_DEF.match(stmt) and not stmt.lstrip().startswith("default"):
        raise SemanticError(f"label definitions are forbidden in base block {scenario}:{action}")
    first_word = re.match(r"\s*([A-Za-z_][A-Za-z0-9_]*)", stmt)
    if first_word and first_word.group(1) in TYPE_STARTERS:
        raise SemanticError(
            f"variable declarations are forbidden in base block {scenario}:{action}"
        )


def validate_model(model: IntermediateModel) -> None:
    """Hard errors for undeclared references, warnings for unused labels."""
    if not model.thread_models and not model.function_models:
        raise SemanticError("a model needs at least one thread or function model")
    for name, scenario in model.scenario_models():
        referenced_labels: set[str] = set()
        for action in scenario.actions.values():
            texts: list[str] = []
            if isinstance(action, Block):
                texts.extend(action.statements)
                for stmt in action.statements:
                    _check_block_statement(name, action.name, stmt)
            for attr in ("condition", "postcondition"):
                value = getattr(action, attr, None)
                if value:
                    texts.append(value)
            for text in texts:
                for ref in LABEL_REF.findall(text):
                    referenced_labels.add(ref)
                    if ref not in scenario.labels:
                        raise SemanticError(
                            f"label %{ref}% is not declared in scenario {name!r}"
                        )
            for param in getattr(action, "params", ()):
                referenced_labels.add(param)
                if param not in scenario.labels:
                    raise SemanticError(
                        f"parameter label {param!r} is not declared in scenario {name!r}"
                    )
        if scenario.labels and scenario.kind == "thread":
            for label in scenario.labels.values():
                if label.name not in referenced_labels and not label.value:
                    model.warnings.append(
                        f"label {label.name!r} of {name!r} is never referenced"
                    )


def pair_signals(model: IntermediateModel) -> SignalPairing:
    """Match every send with every equally named receive across models.

    Parameter vectors must agree in length and positional label types.
    Unmatched sends and receives are warnings, not errors.
    """
    pairing = SignalPairing()
    sends = []
    receives = []
    for name, scenario in model.scenario_models():
        for action in scenario.actions.values():
            if isinstance(action, Send):
                sends.append((name, scenario, action))
            elif isinstance(action, Receive):
                receives.append((name, scenario, action))

    matched_receives: set[tuple[str, str]] = set()
    for sname, sscenario, send in sends:
        hit = False
        for rname, rscenario, recv in receives:
            if send.signal != recv.signal:
                continue
            stypes = [sscenario.labels[p].type_text for p in send.params]
            rtypes = [rscenario.labels[p].type_text for p in recv.params]
            if len(stypes) != len(rtypes):
                raise SignalTypeError(
                    f"signal {send.signal!r}: {sname}:{send.name} carries "
                    f"{len(stypes)} parameters but {rname}:{recv.name} expects {len(rtypes)}"
                )
            if stypes != rtypes:
                raise SignalTypeError(
                    f"signal {send.signal!r}: parameter types of {sname}:{send.name} "
                    f"and {rname}:{recv.name} differ ({stypes} vs {rtypes})"
                )
            pairing.pairs.append((sname, send.name, rname, recv.name))
            matched_receives.add((rname, recv.name))
            hit = True
        if not hit:
            pairing.warnings.append(f"send {sname}:{send.name} has no matching receive")
    for rname, _scenario, recv in receives:
        if (rname, recv.name) not in matched_receives:
            pairing.warnings.append(f"receive {rname}:{recv.name} has no matching send")
    return pairing


def send_target_models(model: IntermediateModel) -> set[str]:
    """Thread models whose first receive pairs with some send; they are
    started by the dispatching model, not by the entry point."""
    pairing = pair_signals(model)
    targets: set[str] = set()
    for _sm, _sa, rm, ra in pairing.pairs:
        scenario = model.thread_models.get(rm)
        if scenario is None:
            continue
        first = next(leaves(scenario.process))
        if isinstance(first, ReceiveRef) and first.name == ra:
            targets.add(rm)
    return targets


def enumerate_traces(model: IntermediateModel, max_len: int) -> set[tuple[str, ...]]:
    """All complete action-name sequences of length <= max_len.

    Mirrors the sequential translation: entry-started thread models run one
    after another in document order (all orders when the entry order is
    ``random``); a send inlines every paired receiver at the dispatch point;
    a jump replaces the remaining transition relation of its own scenario
    model with the jump body; conditions are ignored.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    pairing = pair_signals(model)
    targets = send_target_models(model)
    started = [n for n in model.thread_models if n not in targets]
    if model.entry_order == "random" and len(started) > 1:
        import itertools

        orders = list(itertools.permutations(started))
    else:
        orders = [tuple(started)]

    step_budget = 50 * max_len + 200
    traces: set[tuple[str, ...]] = set()
    for order in orders:
        # A state is (frames, emitted); each frame is a list of pending
        # process expressions belonging to one scenario-model activation.
        initial = [[[(name, model.thread_models[name].process)] for name in order], ()]
        stack = [(initial[0], initial[1], 0)]
        while stack:
            frames, emitted, steps = stack.pop()
            if steps > step_budget:
                continue
            if not frames:
                if len(emitted) <= max_len:
                    traces.add(tuple(emitted))
                continue
            if len(emitted) > max_len:
                continue
            frames = [list(f) for f in frames]
            frame = frames[0]
            if not frame:
                stack.append((frames[1:], emitted, steps + 1))
                continue
            owner, expr = frame.pop(0)
            if isinstance(expr, Seq):
                frame[0:0] = [(owner, c) for c in expr.children]
                stack.append((frames, emitted, steps + 1))
            elif isinstance(expr, Choice):
                for child in reversed(expr.children):
                    branch = [list(f) for f in frames]
                    branch[0] = [(owner, child)] + list(frame)
                    stack.append((branch, emitted, steps + 1))
            elif isinstance(expr, JumpRef):
                scenario = _scenario(model, owner)
                body = scenario.actions[expr.name].body
                frames[0] = [(owner, body)]  # jump replaces the rest of this model
                stack.append((frames, emitted, steps + 1))
            elif isinstance(expr, SendRef):
                new_frames = []
                for _sm, _sa, rm, _ra in [
                    p for p in pairing.pairs if p[0] == owner and p[1] == expr.name
                ]:
                    new_frames.append([(rm, _scenario(model, rm).process)])
                stack.append(
                    (new_frames + frames, emitted + (expr.name,), steps + 1)
                )
            else:  # BlockRef or ReceiveRef
                stack.append((frames, emitted + (expr.name,), steps + 1))
    return traces


def _scenario(model: IntermediateModel, name: str) -> ScenarioModel:
    if name in model.thread_models:
        return model.thread_models[name]
    return model.function_models[name]

"""Scenario-generator pipeline.

Generators run in configured order, each seeing the intermediate model built
so far and adding or replacing scenario models.  Two are bundled: a caller of
entry-point functions with undefined arguments, and a composer that merges
hand-written model documents verbatim.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from ..ctokens import match_brace, match_paren, significant, tokenize
from ..errors import ConfigError, ForgeError, GenerationError
from .model import Block, IntermediateModel, Label, ScenarioModel, parse_model, validate_model
from .process import parse_process

_NAME_TAIL = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*(\[[^\]]*\])?\s*$")


def _signature_params(source: str, function: str) -> list[str] | None:
    """Parameter declaration texts of a function definition, or None."""
    tokens = significant(tokenize(source))
    for i, tok in enumerate(tokens):
        if tok.kind != "id" or tok.text != function:
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].text != "(":
            continue
        close = match_paren(tokens, i + 1)
        if close == -1 or close + 1 >= len(tokens):
            continue
        j = close + 1
        while j < len(tokens) and tokens[j].text not in ("{", ";"):
            j += 1
        if j >= len(tokens) or tokens[j].text != "{":
            continue
        inner = source[tokens[i + 1].end : tokens[close].start]
        return _split_params(inner)
    return None


def _split_params(text: str) -> list[str]:
    params: list[str] = []
    depth = 0
    current = ""
    for ch in text:
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
        return []
    return params


def _param_label(param_text: str, new_name: str) -> tuple[str, bool]:
    """Rewrite one parameter declaration to declare ``new_name``.

    Returns the declaration and whether the parameter is pointer-like.
    """
    from ..ctokens import KEYWORDS, TYPE_STARTERS

    pointer = "*" in param_text or "[" in param_text
    m = _NAME_TAIL.search(param_text)
    if m and m.group(1) not in TYPE_STARTERS and m.group(1) not in KEYWORDS:
        decl = param_text[: m.start(1)] + new_name + param_text[m.end(1):]
    else:
        decl = param_text.rstrip() + " " + new_name
    return decl.strip(), pointer


def entry_caller_generate(fragment, base, options: dict) -> dict[str, ScenarioModel]:
    """Thread models that call matched entry-point functions with undefined
    arguments; pointers come from ``external_allocated_data()``."""
    explicit = options.get("functions")
    pattern = re.compile(options.get("pattern", ".*_main"))
    files = list(fragment.files) if fragment is not None else sorted(base.source_files)

    matched: list[tuple[str, str]] = []  # (function, file)
    for name, d in sorted(base.callgraph.definitions.items()):
        if d.file not in files:
            continue
        if explicit is not None:
            if name in explicit:
                matched.append((name, d.file))
        elif pattern.fullmatch(name):
            matched.append((name, d.file))
    if not matched:
        raise GenerationError(
            f"no entry point matches {explicit or pattern.pattern!r}", stage="entry_caller"
        )

    models: dict[str, ScenarioModel] = {}
    for function, path in matched:
        params = _signature_params(base.read_source(path), function) or []
        scenario = ScenarioModel(name=function, category="entry", kind="thread")
        args = []
        for i, param in enumerate(params):
            label_name = f"ldv_arg_{i}"
            decl, pointer = _param_label(param, label_name)
            scenario.labels[label_name] = Label(
                label_name, decl, "external_allocated_data()" if pointer else None
            )
            args.append(f"%{label_name}%")
        call = f"{function}({', '.join(args)});"
        scenario.actions["call"] = Block(
            "call", statements=[call], comment=f"Call entry point {function}."
        )
        scenario.process = parse_process("<call>")
        models[function] = scenario
    return models


def _generator_entry_caller(model, fragment, base, options):
    for name, scenario in entry_caller_generate(fragment, base, options).items():
        model.thread_models[name] = scenario
    if "order" in options:
        model.entry_order = options["order"]
    return model


def _generator_user_model_composer(model, fragment, base, options):
    doc = options.get("document")
    if doc is None:
        path = options.get("file")
        if path is None:
            raise ConfigError("user_model_composer needs a 'document' or 'file' option")
        base_dir = Path(options.get("base dir", "."))
        doc = json.loads((base_dir / path).read_text())
    supplied = parse_model(doc)
    names = {n for n, _ in model.supplementary_sources}
    for name, text in supplied.supplementary_sources:
        if name not in names:
            model.supplementary_sources.append((name, text))
    model.thread_models.update(supplied.thread_models)
    model.function_models.update(supplied.function_models)
    if "entry order" in doc:
        model.entry_order = supplied.entry_order
    return model


GENERATORS = {
    "entry_caller": _generator_entry_caller,
    "user_model_composer": _generator_user_model_composer,
}


def run_generator_pipeline(fragment, base, specs: list[dict]) -> IntermediateModel:
    """Run the configured generator stages in order over a growing model."""
    model = IntermediateModel()
    for stage in specs:
        name = stage.get("name")
        if name not in GENERATORS:
            raise ConfigError(f"unknown scenario generator {name!r}")
        try:
            model = GENERATORS[name](model, fragment, base, stage.get("options", {}))
        except GenerationError:
            raise
        except ForgeError as exc:
            raise GenerationError(str(exc), stage=name)
    if not model.thread_models and not model.function_models:
        raise GenerationError("no entry point derivable from an empty pipeline")
    validate_model(model)
    return model

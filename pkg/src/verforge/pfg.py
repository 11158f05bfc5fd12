"""Program decomposition into fragments.

Implements the fixed sequence: file graph, decomposition tactic, optional
refinement by a decomposition specification, target resolution and per-target
composition.  Tactics are pluggable; the two bundled ones mirror a
linker-command walk and an entry-point callgraph closure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import PurePosixPath

from .buildbase import BuildBase, FileGraph, build_file_graph
from .errors import ConfigError, SpecError, TargetError


@dataclass
class ProgramFragment:
    name: str
    files: tuple[str, ...]  # ordered, duplicate-free
    is_target: bool = False

    def with_files(self, files) -> "ProgramFragment":
        return ProgramFragment(self.name, _ordered(files), self.is_target)


def _ordered(files) -> tuple[str, ...]:
    seen = []
    for f in sorted(files):
        if f not in seen:
            seen.append(f)
    return tuple(seen)


@dataclass
class FragmentGraph:
    fragments: dict[str, ProgramFragment] = field(default_factory=dict)
    edges: set[tuple[str, str]] = field(default_factory=set)

    def add(self, fragment: ProgramFragment) -> None:
        self.fragments[fragment.name] = fragment


@dataclass
class DecompositionSpec:
    version: str = ""
    fragments: dict[str, list[str]] = field(default_factory=dict)
    add_all: list[str] = field(default_factory=list)
    exclude_all: list[str] = field(default_factory=list)

    @classmethod
    def from_document(cls, doc: dict, version: str | None = None) -> "DecompositionSpec":
        """Read the JSON layout keyed by program version string."""
        if version is None:
            if len(doc) != 1:
                raise ConfigError("decomposition spec needs an explicit version key")
            version = next(iter(doc))
        try:
            entry = doc[version]
        except KeyError:
            raise ConfigError(f"decomposition spec has no entry for version {version!r}")
        return cls(
            version=version,
            fragments={k: list(v) for k, v in entry.get("fragments", {}).items()},
            add_all=list(entry.get("add to all fragments", ())),
            exclude_all=list(entry.get("exclude from all fragments", ())),
        )


@dataclass
class PfgConfig:
    decomposition_tactic: str
    composition_tactic: str | None = None
    targets: list[str] = field(default_factory=list)
    tactic_options: dict = field(default_factory=dict)

    @classmethod
    def from_document(cls, doc: dict) -> "PfgConfig":
        return cls(
            decomposition_tactic=doc.get("decomposition tactic", "linker"),
            composition_tactic=doc.get("composition tactic"),
            targets=list(doc.get("targets", ())),
            tactic_options=dict(doc.get("tactic options", {})),
        )


def compute_edges(graph: FragmentGraph, base: BuildBase) -> None:
    """Recompute fragment-graph edges from the callgraph."""
    file_to_fragments: dict[str, list[str]] = {}
    for frag in graph.fragments.values():
        for f in frag.files:
            file_to_fragments.setdefault(f, []).append(frag.name)
    edges: set[tuple[str, str]] = set()
    for caller, callee, file, _line in base.callgraph.calls:
        target = base.callgraph.defining_file(callee)
        if target is None:
            continue
        for fa in file_to_fragments.get(file, ()):
            for fb in file_to_fragments.get(target, ()):
                if fa != fb:
                    edges.add((fa, fb))
    graph.edges = edges


def linker_tactic(base: BuildBase, file_graph: FileGraph, options: dict) -> FragmentGraph:
    """One fragment per selected LD/AR output; files are the C inputs of the
    transitively reachable compile commands."""
    patterns = options.get("suffixes", [".ko", "built-in.o", "built-in.a"])
    producers = {c.output: c for c in list(base.cc_commands) + list(base.ld_commands)}
    graph = FragmentGraph()
    for ld in sorted(base.ld_commands, key=lambda c: c.output):
        name = PurePosixPath(ld.output).name
        if not any(name.endswith(p) for p in patterns):
            continue
        files: set[str] = set()
        queue = list(ld.inputs)
        while queue:
            item = queue.pop()
            cmd = producers.get(item)
            if cmd is None:
                continue
            if hasattr(cmd, "input"):  # compile command
                files.add(cmd.input)
            else:
                queue.extend(cmd.inputs)
        if files:
            graph.add(ProgramFragment(ld.output, _ordered(files)))
    compute_edges(graph, base)
    return graph


def closure_tactic(base: BuildBase, file_graph: FileGraph, options: dict) -> FragmentGraph:
    """Fragment per entry-point-defining file plus its callgraph closure,
    with an optional shared-library directory split off."""
    pattern = re.compile(options.get("entry pattern", ".*_main"))
    library_dir = options.get("library dir", "libbb")
    include_library = options.get("include_library", False)

    lib_files = _ordered(
        f for f in file_graph.nodes if library_dir and _under(f, library_dir)
    )
    main_files: dict[str, str] = {}  # entry function -> file
    for name, d in sorted(base.callgraph.definitions.items()):
        if pattern.fullmatch(name) and d.file in file_graph.nodes and d.file not in lib_files:
            main_files[name] = d.file
    if not main_files:
        raise TargetError(f"no function matches entry pattern {pattern.pattern!r}")

    adj: dict[str, set[str]] = {}
    for (a, b), _w in file_graph.weights.items():
        adj.setdefault(a, set()).add(b)

    graph = FragmentGraph()
    if lib_files:
        graph.add(ProgramFragment(library_dir, lib_files))
    for entry, main_file in sorted(main_files.items()):
        fragment_name = entry[: -len("_main")] if entry.endswith("_main") else entry
        files = {main_file}
        queue = [main_file]
        while queue:
            cur = queue.pop()
            for nxt in adj.get(cur, ()):
                if nxt in lib_files or nxt in files:
                    continue
                files.add(nxt)
                queue.append(nxt)
        if include_library:
            files.update(lib_files)
        graph.add(ProgramFragment(fragment_name, _ordered(files)))
    compute_edges(graph, base)
    return graph


def _under(path: str, directory: str) -> bool:
    return path == directory or path.startswith(directory.rstrip("/") + "/")


DECOMPOSITION_TACTICS = {"linker": linker_tactic, "closure": closure_tactic}


def _resolve_item(item: str, graph: FragmentGraph, base: BuildBase) -> list[str]:
    """A spec item is a file path, a fragment name or a function name."""
    if item in base.source_files:
        return [item]
    if item in graph.fragments:
        return list(graph.fragments[item].files)
    d = base.callgraph.definitions.get(item)
    if d is not None:
        return [d.file]
    raise SpecError(f"unresolvable name in decomposition spec: {item!r}")


def refine_fragments(
    graph: FragmentGraph, spec: DecompositionSpec, base: BuildBase
) -> FragmentGraph:
    """Apply a decomposition specification on top of tactic output."""
    refined = FragmentGraph()
    explicit: dict[str, tuple[str, ...]] = {}
    for name in sorted(spec.fragments):
        files: list[str] = []
        for item in spec.fragments[name]:
            files.extend(_resolve_item(item, graph, base))
        explicit[name] = _ordered(files)

    for name, frag in sorted(graph.fragments.items()):
        if name in explicit:
            refined.add(ProgramFragment(name, explicit.pop(name), frag.is_target))
        else:
            refined.add(ProgramFragment(name, frag.files, frag.is_target))
    for name, files in explicit.items():
        refined.add(ProgramFragment(name, files))

    additions = [f for item in spec.add_all for f in _resolve_item(item, graph, base)]
    removals = {f for item in spec.exclude_all for f in _resolve_item(item, graph, base)}
    for name, frag in list(refined.fragments.items()):
        files = [f for f in list(frag.files) + additions if f not in removals]
        refined.add(frag.with_files(files))
    compute_edges(refined, base)
    return refined


def resolve_targets(graph: FragmentGraph, conf: PfgConfig, base: BuildBase) -> FragmentGraph:
    """Mark fragments containing files matched by target patterns."""
    compiled = [re.compile(p) for p in conf.targets]
    functions_by_file: dict[str, list[str]] = {}
    for name, d in base.callgraph.definitions.items():
        functions_by_file.setdefault(d.file, []).append(name)

    def file_matches(path: str) -> bool:
        for rx in compiled:
            if rx.fullmatch(path):
                return True
            if any(rx.fullmatch(fn) for fn in functions_by_file.get(path, ())):
                return True
            for parent in PurePosixPath(path).parents:
                if str(parent) != "." and rx.fullmatch(str(parent)):
                    return True
        return False

    for name, frag in graph.fragments.items():
        frag.is_target = any(file_matches(f) for f in frag.files)
    return graph


def greedy_composition(
    target: ProgramFragment, graph: FragmentGraph, base: BuildBase, options: dict
) -> list[ProgramFragment]:
    """Greedily add fragments that define functions the target calls but does
    not define, smallest-name first on ties."""
    bound = options.get("max added fragments", 3)
    defs_by_file: dict[str, set[str]] = {}
    for name, d in base.callgraph.definitions.items():
        defs_by_file.setdefault(d.file, set()).add(name)

    def defined_in(files) -> set[str]:
        out: set[str] = set()
        for f in files:
            out |= defs_by_file.get(f, set())
        return out

    union = set(target.files)
    added: list[ProgramFragment] = []
    while len(added) < bound:
        defined = defined_in(union)
        needed = {
            callee
            for caller, callee, file, _line in base.callgraph.calls
            if file in union and callee not in defined
            and callee in base.callgraph.definitions
        }
        if not needed:
            break
        best_name, best_gain = None, 0
        for name in sorted(graph.fragments):
            frag = graph.fragments[name]
            if frag.name == target.name or frag in added:
                continue
            gain = len(needed & defined_in(frag.files))
            if gain > best_gain:
                best_name, best_gain = name, gain
        if best_name is None:
            break
        chosen = graph.fragments[best_name]
        added.append(chosen)
        union.update(chosen.files)
    return added


COMPOSITION_TACTICS = {"greedy": greedy_composition}


def decompose(
    conf: PfgConfig, base: BuildBase, spec: DecompositionSpec | None = None
) -> list[ProgramFragment]:
    """Full decomposition pipeline; returns the composed target fragments."""
    try:
        tactic = DECOMPOSITION_TACTICS[conf.decomposition_tactic]
    except KeyError:
        raise ConfigError(f"unknown decomposition tactic {conf.decomposition_tactic!r}")
    composition = None
    if conf.composition_tactic:
        try:
            composition = COMPOSITION_TACTICS[conf.composition_tactic]
        except KeyError:
            raise ConfigError(f"unknown composition tactic {conf.composition_tactic!r}")

    file_graph = build_file_graph(base)
    graph = tactic(base, file_graph, conf.tactic_options)
    if spec is not None:
        graph = refine_fragments(graph, spec, base)
    graph = resolve_targets(graph, conf, base)

    targets = [f for _, f in sorted(graph.fragments.items()) if f.is_target]
    if not targets:
        raise TargetError(f"no fragment matches target patterns {conf.targets!r}")

    final: list[ProgramFragment] = []
    for fragment in targets:
        files = set(fragment.files)
        if composition is not None:
            for extra in composition(fragment, graph, base, conf.tactic_options):
                files.update(extra.files)
        final.append(ProgramFragment(fragment.name, _ordered(files), True))
    return final


def fragments_to_json(fragments) -> list[dict]:
    return [
        {"name": f.name, "files": list(f.files), "target": f.is_target}
        for f in fragments
    ]


def fragments_from_json(doc) -> list[ProgramFragment]:
    return [ProgramFragment(e["name"], tuple(e["files"]), e.get("target", False)) for e in doc]

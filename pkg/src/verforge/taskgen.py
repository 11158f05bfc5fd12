"""Requirement-spec bases, verifier profiles and task packaging.

Resolves the tree-shaped requirement base (template inheritance down the
tree, plugin options merged per plugin name) and the inheritable verifier
profiles, then assembles the four-file bundle a verification backend
consumes: program, property file, task definition and benchmark definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, TaskError


@dataclass
class ResolvedReqSpec:
    id: str
    plugin_options: dict[str, dict]  # plugin name -> merged options
    plugin_order: list[str]
    verifier_profile: str
    verifier: dict = field(default_factory=dict)  # {"name": ..., "version": ...}


def resolve_req_specs(base: dict) -> list[ResolvedReqSpec]:
    """Depth-first resolution of a requirement-specifications base document."""
    templates = base.get("templates", {})
    root = base.get("requirement specifications")
    if root is None:
        raise ConfigError("requirement base lacks a 'requirement specifications' entry")

    def template_plugins(name: str) -> list[dict]:
        try:
            entry = templates[name]
        except KeyError:
            raise ConfigError(f"unknown template {name!r}")
        return entry.get("plugins", [])

    resolved: list[ResolvedReqSpec] = []

    def walk(node: dict, path: list[str], plugins: list[dict] | None):
        if "template" in node:
            plugins = [dict(p, options=dict(p.get("options", {})))
                       for p in template_plugins(node["template"])]
        if "plugins" in node:
            if plugins is None:
                plugins = [dict(p, options=dict(p.get("options", {})))
                           for p in node["plugins"]]
            else:
                plugins = _merge_plugins(plugins, node["plugins"])
        identifier = node.get("identifier")
        here = path + [identifier] if identifier else path
        children = node.get("children")
        if children:
            for child in children:
                walk(child, here, plugins)
            return
        if not identifier:
            return
        if plugins is None:
            raise ConfigError(f"requirement {':'.join(here)!r} has no template in scope")
        fvtp = next((p for p in plugins if p.get("name") == "FVTP"), None)
        options = {p["name"]: p.get("options", {}) for p in plugins}
        resolved.append(
            ResolvedReqSpec(
                id=":".join(here),
                plugin_options=options,
                plugin_order=[p["name"] for p in plugins],
                verifier_profile=(fvtp or {}).get("options", {}).get("verifier profile", ""),
                verifier=(fvtp or {}).get("options", {}).get("verifier", {}),
            )
        )

    walk(root, [], None)
    return resolved


def _merge_plugins(inherited: list[dict], overrides: list[dict]) -> list[dict]:
    """Shallow per-key merge of node plugin options over the inherited list."""
    merged = [dict(p, options=dict(p.get("options", {}))) for p in inherited]
    by_name = {p["name"]: p for p in merged}
    for override in overrides:
        name = override.get("name")
        if name in by_name:
            by_name[name]["options"].update(override.get("options", {}))
        else:
            merged.append(dict(override, options=dict(override.get("options", {}))))
    return merged


@dataclass
class ResolvedProfile:
    name: str
    tool: str
    version: str
    options: list[dict]  # ordered {flag: value} records
    safety_properties: list[str]

    def option_flags(self) -> list[str]:
        return [flag for record in self.options for flag in record]


def resolve_profile(profiles: dict, name: str, tool: str, version: str) -> ResolvedProfile:
    """Walk the inheritance chain root-first, concatenating ``add options``
    and overriding ``safety properties`` where redefined."""
    try:
        entry = profiles["profiles"][name][tool][version]
    except KeyError:
        raise ConfigError(f"no profile {name!r} for {tool} {version}")
    templates = profiles.get("templates", {})

    chain: list[dict] = [entry]
    seen: set[str] = set()
    current = entry
    while "inherit" in current:
        parent_name = current["inherit"]
        if parent_name in seen:
            raise ConfigError(f"inheritance cycle through template {parent_name!r}")
        seen.add(parent_name)
        try:
            current = templates[parent_name]
        except KeyError:
            raise ConfigError(f"unknown template {parent_name!r}")
        chain.append(current)

    options: list[dict] = []
    properties: list[str] = []
    for node in reversed(chain):  # root template first
        options.extend(node.get("add options", ()))
        if "safety properties" in node:
            properties = list(node["safety properties"])
    if not properties:
        raise ConfigError(f"profile {name!r} resolves to no safety properties")
    return ResolvedProfile(name, tool, version, options, properties)


@dataclass
class VerificationTask:
    id: str
    fragment: str
    requirement: str
    program: str
    property_file: str
    task_definition: str
    benchmark: str
    limits: dict
    priority: int = 0
    entry_point: str = "entry_point"
    line_map: list | None = None


DEFAULT_LIMITS = {
    "cpu_seconds": 270,
    "wall_seconds": 300,
    "memory_bytes": 1_000_000_000,
}

# ratio between the hard and the soft time limit exhibited by the default
# benchmark definition (300 against 270)
_HARD_LIMIT_RATIO = 300 / 270


def render_property_file(properties: list[str], entry_point: str) -> str:
    return "\n".join(p.replace("{entry_point}", entry_point) for p in properties) + "\n"


def render_task_definition() -> str:
    return (
        "format_version: '1.0'\n"
        "\n"
        "input_files: 'cil.i'\n"
        "\n"
        "properties:\n"
        "  - property_file: safe-prps.prp\n"
    )


def render_benchmark(tool: str, options: list[dict], cpu_seconds: int) -> str:
    hard = math.ceil(cpu_seconds * _HARD_LIMIT_RATIO)
    lines = [
        '<?xml version="1.0" ?>',
        f'<benchmark hardtimelimit="{hard}" timelimit="{cpu_seconds}" tool="{tool.lower()}">',
        "    <rundefinition>",
    ]
    for record in options:
        for flag, value in record.items():
            if value == "" or value is None:
                lines.append(f'        <option name="{flag}"/>')
            else:
                lines.append(f'        <option name="{flag}">{value}</option>')
    lines += [
        "    </rundefinition>",
        "    <tasks>",
        "        <include>cil.yml</include>",
        "    </tasks>",
        "    <propertyfile>safe-prps.prp</propertyfile>",
        "</benchmark>",
    ]
    return "\n".join(lines) + "\n"


def emit_task(
    fragment,
    spec: ResolvedReqSpec,
    profile: ResolvedProfile,
    harness: str,
    limits: dict | None = None,
    entry_point: str = "entry_point",
    priority: int = 0,
    line_map=None,
) -> VerificationTask:
    """Assemble the four-file verification task for one (fragment, spec) pair."""
    if not harness.strip():
        raise TaskError("empty merged program")
    limits = {**DEFAULT_LIMITS, **(limits or {})}
    fragment_name = getattr(fragment, "name", fragment)
    return VerificationTask(
        id=f"{fragment_name}:{spec.id}",
        fragment=fragment_name,
        requirement=spec.id,
        program=harness,
        property_file=render_property_file(profile.safety_properties, entry_point),
        task_definition=render_task_definition(),
        benchmark=render_benchmark(profile.tool, profile.options, limits["cpu_seconds"]),
        limits=limits,
        priority=priority,
        entry_point=entry_point,
        line_map=line_map,
    )


def write_task_dir(task: VerificationTask, directory) -> None:
    """Materialize the bundle as the four files backends expect."""
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "cil.i").write_text(task.program)
    (directory / "safe-prps.prp").write_text(task.property_file)
    (directory / "cil.yml").write_text(task.task_definition)
    (directory / "benchmark.xml").write_text(task.benchmark)

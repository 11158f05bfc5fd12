"""Processing of verification results.

Violation witnesses become internal error traces with events mapped back to
original source lines; NOTE/ASSERT comments from model sources mark the
relevant events; coverage reports merge with per-directory statistics; and
expert marks match similar results through a line-independent signature.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import PurePosixPath

from .errors import WitnessError

_GRAPHML_NS = "{http://graphml.graphdrawing.org/xmlns}"


@dataclass
class TraceEvent:
    file: str
    line: int
    kind: str  # call | return | statement | assumption | error
    text: str = ""
    function: str = ""
    relevant: bool = True
    note: str | None = None
    assert_desc: str | None = None


@dataclass
class ErrorTrace:
    events: list[TraceEvent] = field(default_factory=list)
    source_refs: dict[str, str] = field(default_factory=dict)  # merged name -> provenance

    @property
    def terminal(self) -> TraceEvent | None:
        return self.events[-1] if self.events else None


def parse_witness(graphml: str, merged_source: str = "", line_map=None) -> ErrorTrace:
    """Linearize a GraphML violation witness into the internal trace format.

    ``line_map`` maps merged-line numbers back to (original file, line); the
    merged source supplies each event's statement text.
    """
    try:
        root = ET.fromstring(graphml)
    except ET.ParseError as exc:
        raise WitnessError(f"malformed witness document: {exc}")
    graph = root.find(f"{_GRAPHML_NS}graph")
    if graph is None:
        raise WitnessError("witness has no graph element")

    edges = []
    violation_nodes = set()
    for node in graph.findall(f"{_GRAPHML_NS}node"):
        for data in node.findall(f"{_GRAPHML_NS}data"):
            if data.get("key") == "violation" and (data.text or "").strip() == "true":
                violation_nodes.add(node.get("id"))
    for edge in graph.findall(f"{_GRAPHML_NS}edge"):
        data = {
            d.get("key"): (d.text or "")
            for d in edge.findall(f"{_GRAPHML_NS}data")
        }
        edges.append((edge.get("source"), edge.get("target"), data))
    if not edges:
        raise WitnessError("witness has no edges describing a violation path")

    source_lines = merged_source.splitlines()
    trace = ErrorTrace()
    stack: list[str] = []
    for _source, target, data in edges:
        try:
            line = int(data.get("startline", "0"))
        except ValueError:
            line = 0
        if "enterFunction" in data:
            kind = "call"
            stack.append(data["enterFunction"])
        elif "returnFrom" in data:
            kind = "return"
        elif "assumption" in data:
            kind = "assumption"
        else:
            kind = "statement"
        function = stack[-1] if stack else ""
        if kind == "return" and stack:
            stack.pop()
            function = data["returnFrom"]
        origin_file, origin_line = (data.get("originfile", ""), line)
        if line_map is not None and 1 <= line <= len(line_map):
            origin_file, origin_line = line_map[line - 1]
        text = data.get("assumption") or (
            source_lines[line - 1].strip() if 1 <= line <= len(source_lines) else ""
        )
        event = TraceEvent(
            file=origin_file, line=origin_line, kind=kind, text=text, function=function
        )
        if target in violation_nodes:
            event.kind = "error"
            if "enterFunction" in data:
                event.function = stack[-2] if len(stack) >= 2 else data["enterFunction"]
        trace.events.append(event)

    if not any(e.kind == "error" for e in trace.events):
        raise WitnessError("witness contains no violation node")
    while trace.events and trace.events[-1].kind != "error":
        trace.events.pop()
    return trace


_NOTE_RE = re.compile(r"/\*\s*NOTE\s+(.*?)\*/", re.DOTALL)
_ASSERT_RE = re.compile(r"/\*\s*ASSERT\s+(.*?)\*/", re.DOTALL)


def _annotation_lines(source: str) -> tuple[dict[int, str], dict[int, str]]:
    """Line -> text maps for statements directly following NOTE/ASSERT comments."""
    notes: dict[int, str] = {}
    asserts: dict[int, str] = {}
    lines = source.splitlines()
    for regex, out in ((_NOTE_RE, notes), (_ASSERT_RE, asserts)):
        for m in regex.finditer(source):
            text = " ".join(m.group(1).split())
            end_index = source[: m.end()].count("\n")  # line holding the '*/'
            line_start = source.rfind("\n", 0, m.end()) + 1
            column = m.end() - line_start
            if end_index < len(lines) and lines[end_index][column:].strip():
                out[end_index + 1] = text
                continue
            for ln in range(end_index + 1, len(lines)):
                probe = lines[ln].strip()
                if probe and not probe.startswith(("/*", "//", "*")):
                    out[ln + 1] = text
                    break
    return notes, asserts


def annotate_relevance(trace: ErrorTrace, model_sources) -> ErrorTrace:
    """Attach NOTE/ASSERT texts and relevance flags to trace events.

    ``model_sources`` is a mapping or list of (file name, C text) for
    environment-model and requirement-model files; events in those files stay
    irrelevant unless annotated, program-fragment events stay relevant.
    """
    if isinstance(model_sources, dict):
        model_sources = list(model_sources.items())
    annotations = {
        name: _annotation_lines(text) for name, text in model_sources
    }
    for event in trace.events:
        ann = annotations.get(event.file)
        if ann is None:
            continue
        notes, asserts = ann
        if event.line in asserts:
            event.assert_desc = asserts[event.line]
            event.relevant = True
        elif event.line in notes:
            event.note = notes[event.line]
            event.relevant = True
        else:
            event.relevant = False
    return trace


@dataclass
class FileCoverage:
    lines_total: int = 0
    lines_covered: int = 0
    functions_total: int = 0
    functions_covered: int = 0
    covered_line_set: set[int] = field(default_factory=set)


@dataclass
class CoverageReport:
    files: dict[str, FileCoverage] = field(default_factory=dict)
    directories: dict[str, FileCoverage] = field(default_factory=dict)
    flagged: list[str] = field(default_factory=list)

    def line_percent(self, directory: str) -> int:
        entry = self.directories[directory]
        if entry.lines_total == 0:
            return 0
        return int(100 * entry.lines_covered / entry.lines_total)


def parse_hitlist(text: str) -> dict:
    """GCOV-style coverage input: one ``file:line`` hit per line."""
    out: dict[str, dict] = {}
    for raw_line in text.splitlines():
        stripped = raw_line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fname, _sep, line_text = stripped.rpartition(":")
        if not fname or not line_text.isdigit():
            continue
        out.setdefault(fname, {"covered": set()})["covered"].add(int(line_text))
    return {name: {"covered": sorted(e["covered"])} for name, e in out.items()}


def map_coverage(raw: dict, line_map) -> dict:
    """Translate a merged-file coverage document to original files."""
    out: dict[str, dict] = {}
    for _merged_name, entry in raw.items():
        for line in entry.get("covered", ()):
            if not (1 <= line <= len(line_map)):
                continue
            fname, orig = line_map[line - 1]
            if orig == 0:
                continue
            out.setdefault(fname, {"covered": set()})["covered"].add(orig)
    return {
        name: {"covered": sorted(entry["covered"])} for name, entry in out.items()
    }


def merge_coverage(reports: list[dict], base, denominator: str = "verified") -> CoverageReport:
    """Union per-file covered line sets and roll statistics up the tree.

    ``base`` supplies file totals (line counts read from the build base's
    root directory, callgraph definitions for function spans).  The
    ``denominator`` selects between files seen in the reports and all source
    files of the base.
    """
    covered: dict[str, set[int]] = {}
    report_totals: dict[str, int] = {}
    for report in reports:
        for fname, entry in report.items():
            covered.setdefault(fname, set()).update(entry.get("covered", ()))
            if "total_lines" in entry:
                report_totals[fname] = max(
                    report_totals.get(fname, 0), entry["total_lines"]
                )

    if denominator == "all" and base is not None:
        universe = sorted(set(covered) | set(base.source_files))
    else:
        universe = sorted(covered)

    defs_by_file: dict[str, list] = {}
    if base is not None:
        for name, d in base.callgraph.definitions.items():
            defs_by_file.setdefault(d.file, []).append((name, d.line, d.end_line))

    result = CoverageReport()
    for fname in universe:
        lines = covered.get(fname, set())
        total = report_totals.get(fname, 0)
        if base is not None:
            try:
                total = (base.root_dir / fname).read_text().count("\n") + 1
            except (OSError, TypeError):
                if fname not in report_totals:
                    result.flagged.append(fname)
        spans = defs_by_file.get(fname, [])
        fc = FileCoverage(
            lines_total=total,
            lines_covered=len(lines),
            functions_total=len(spans),
            functions_covered=sum(
                1 for _n, start, end in spans if any(start <= l <= end for l in lines)
            ),
            covered_line_set=lines,
        )
        result.files[fname] = fc
        for parent in PurePosixPath(fname).parents:
            key = str(parent)
            agg = result.directories.setdefault(key, FileCoverage())
            agg.lines_total += fc.lines_total
            agg.lines_covered += fc.lines_covered
            agg.functions_total += fc.functions_total
            agg.functions_covered += fc.functions_covered
    return result


def _percent(count: int, total: int) -> int:
    """Nearest integer percent, halves away from zero."""
    if total == 0:
        return 0
    return int(100 * count / total + 0.5)


def verdict_statistics(verdicts, false_alarm_classes=None) -> dict:
    """Counts and integer percentages per verdict kind, per Unknown reason
    and per false-alarm class."""
    kinds: dict[str, int] = {}
    unknown_reasons: dict[str, int] = {}
    for v in verdicts:
        kind = getattr(v, "kind", v)
        kinds[kind] = kinds.get(kind, 0) + 1
        if kind == "Unknown":
            reason = getattr(v, "reason", "") or "unspecified"
            reason = reason.split(":", 1)[0]
            unknown_reasons[reason] = unknown_reasons.get(reason, 0) + 1

    def section(counts: dict[str, int]) -> dict:
        total = sum(counts.values())
        return {
            "counts": dict(counts),
            "total": total,
            "percentages": {k: _percent(c, total) for k, c in counts.items()},
        }

    out = {"kinds": section(kinds), "unknown_reasons": section(unknown_reasons)}
    if false_alarm_classes is not None:
        fa: dict[str, int] = {}
        if isinstance(false_alarm_classes, dict):
            fa = dict(false_alarm_classes)
        else:
            for cls in false_alarm_classes:
                fa[cls] = fa.get(cls, 0) + 1
        out["false_alarms"] = section(fa)
    return out


@dataclass
class MarkRevision:
    verdict_class: str
    description: str
    tags: list[str]


@dataclass
class Mark:
    id: str
    verdict_class: str  # fault | false_alarm:environment | false_alarm:requirement_spec
    #                     | false_alarm:verifier | false_alarm:other
    description: str
    signature: tuple
    tags: list[str] = field(default_factory=list)
    history: list[MarkRevision] = field(default_factory=list)

    def revise(self, verdict_class=None, description=None, tags=None) -> None:
        self.history.append(MarkRevision(self.verdict_class, self.description, list(self.tags)))
        if verdict_class is not None:
            self.verdict_class = verdict_class
        if description is not None:
            self.description = description
        if tags is not None:
            self.tags = list(tags)


@dataclass(frozen=True)
class Assessment:
    task_id: str
    mark_id: str
    mode: str  # manual | automatic


def mark_signature(trace: ErrorTrace) -> tuple:
    """Line-independent matching key: (function, annotation text) over the
    relevant events."""
    out = []
    for event in trace.events:
        if not event.relevant:
            continue
        text = event.assert_desc or event.note
        if text is None and event.kind != "error":
            continue
        out.append((event.function, text or event.kind))
    return tuple(out)


def failure_signature(reason: str) -> str:
    """Failure reasons match after stripping digits (addresses, counters)."""
    return re.sub(r"\d+", "", reason).strip()


def auto_assess(task_id: str, trace_or_reason, marks) -> list[Assessment]:
    """One automatic assessment per mark with an equal signature."""
    if isinstance(trace_or_reason, ErrorTrace):
        signature = mark_signature(trace_or_reason)
    else:
        signature = failure_signature(str(trace_or_reason))
    return [
        Assessment(task_id, mark.id, "automatic")
        for mark in marks
        if mark.signature == signature
    ]

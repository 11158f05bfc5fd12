"""End-to-end job runner.

Drives one verification job: ingest the build base, decompose into target
fragments, synthesize and translate environment models, weave requirement
aspects, merge into a single unit, package tasks and solve them against a
backend, then post-process witnesses and coverage.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import results as results_mod
from .buildbase import BuildBase, ingest_build_base
from .emg import TranslationOptions, run_generator_pipeline, translate
from .errors import ConfigError, ForgeError
from .pfg import DecompositionSpec, PfgConfig, decompose
from .sched import Job, MiniverBackend, Scheduler, Verdict
from .taskgen import (
    ResolvedReqSpec,
    VerificationTask,
    emit_task,
    resolve_profile,
    resolve_req_specs,
)
from .weave import merge, parse_aspect, weave

PRESETS_DIR = Path(__file__).parent / "presets"


@dataclass
class JobConfig:
    name: str
    build_dir: Path
    pfg: PfgConfig
    specs_dir: Path
    requirements_base: dict
    profiles: dict
    requirement_patterns: list[str] = field(default_factory=lambda: [".*"])
    decomposition_spec: DecompositionSpec | None = None
    limits: dict = field(default_factory=dict)
    priority: int = 0
    workers: int = 2
    entry_point: str = "entry_point"

    @classmethod
    def load(cls, job_dir: str | Path) -> "JobConfig":
        job_dir = Path(job_dir)
        doc_path = job_dir / "job.json" if job_dir.is_dir() else job_dir
        base_dir = doc_path.parent
        try:
            doc = json.loads(doc_path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read job configuration: {exc}")
        spec = None
        if "decomposition spec" in doc:
            spec_doc = json.loads((base_dir / doc["decomposition spec"]).read_text())
            spec = DecompositionSpec.from_document(spec_doc, doc.get("version"))
        return cls(
            name=doc.get("name", doc_path.stem),
            build_dir=base_dir / doc.get("build", "build"),
            pfg=PfgConfig.from_document(doc.get("pfg", {})),
            specs_dir=base_dir / doc.get("specs dir", "specs"),
            requirements_base=json.loads(
                (base_dir / doc.get("requirements base", "specs/base.json")).read_text()
            ),
            profiles=json.loads(
                (base_dir / doc.get("profiles", "specs/profiles.json")).read_text()
            ),
            requirement_patterns=doc.get("requirements", [".*"]),
            decomposition_spec=spec,
            limits=doc.get("limits", {}),
            priority=doc.get("priority", 0),
            workers=doc.get("workers", 2),
            entry_point=doc.get("entry point", "entry_point"),
        )


@dataclass
class TaskOutcome:
    task: VerificationTask
    verdict: Verdict
    trace: results_mod.ErrorTrace | None = None
    coverage: dict | None = None  # per original file


@dataclass
class JobResult:
    job: Job
    tasks: list[VerificationTask]
    outcomes: list[TaskOutcome] = field(default_factory=list)
    coverage: dict[str, results_mod.CoverageReport] = field(default_factory=dict)
    statistics: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> dict[str, str]:
        return {o.task.id: o.verdict.kind for o in self.outcomes}


def _selected_specs(config: JobConfig) -> list[ResolvedReqSpec]:
    specs = resolve_req_specs(config.requirements_base)
    patterns = [re.compile(p) for p in config.requirement_patterns]
    chosen = [s for s in specs if any(rx.fullmatch(s.id) for rx in patterns)]
    if not chosen:
        raise ConfigError(
            f"no requirement specification matches {config.requirement_patterns!r}"
        )
    return chosen


def generate_tasks(config: JobConfig, base: BuildBase | None = None):
    """All (task, model_sources) pairs for the configured job."""
    base = base or ingest_build_base(config.build_dir)
    fragments = decompose(config.pfg, base, config.decomposition_spec)
    specs = _selected_specs(config)

    out = []
    for fragment in fragments:
        for spec in specs:
            out.append(_build_task(config, base, fragment, spec))
    return out


def _read_spec_file(config: JobConfig, rel: str) -> str:
    path = config.specs_dir / rel
    try:
        return path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read model file {rel!r}: {exc}")


def _build_task(config: JobConfig, base, fragment, spec: ResolvedReqSpec):
    emg_options = spec.plugin_options.get("EMG", {})
    generators = emg_options.get("generators options", [])
    generators = [
        {**stage, "options": {"base dir": str(config.specs_dir), **stage.get("options", {})}}
        for stage in generators
    ]
    model = run_generator_pipeline(fragment, base, generators)
    translation = TranslationOptions.from_document(
        emg_options.get("translation options", {})
    )
    translation.entry_point = config.entry_point
    bundle = translate(model, fragment, translation)

    rsg_options = spec.plugin_options.get("RSG", {})
    model_files = list(rsg_options.get("common models", [])) + list(
        rsg_options.get("models", [])
    )
    model_sources: list[tuple[str, str]] = []
    aspect_texts = list(bundle.aspects.values())
    for rel in model_files:
        model_sources.append((rel, _read_spec_file(config, rel)))
        aspect_rel = re.sub(r"\.c$", ".aspect", rel)
        if (config.specs_dir / aspect_rel).exists():
            aspect_texts.append(_read_spec_file(config, aspect_rel))

    advice = [a for text in aspect_texts for a in parse_aspect(text)]
    merge_inputs: list = list(model_sources)
    for path in fragment.files:
        woven, report = weave(base.read_source(path), advice)
        merge_inputs.append((path, woven, report.line_origins or None))
    merge_inputs.append(("environment.c", bundle.main_source))
    model_sources.append(("environment.c", bundle.main_source))

    merged = merge(
        merge_inputs,
        roots=(config.entry_point, "ldv_check_final_state"),
    )

    profile = resolve_profile(
        config.profiles,
        spec.verifier_profile,
        spec.verifier.get("name", "miniver"),
        spec.verifier.get("version", "1.0"),
    )
    task = emit_task(
        fragment,
        spec,
        profile,
        merged.text,
        limits=config.limits,
        entry_point=config.entry_point,
        priority=config.priority,
        line_map=merged.line_map,
    )
    return task, dict(model_sources)


def run_job(
    config: JobConfig | str | Path,
    backend=None,
    workers: int | None = None,
    on_event=None,
    scheduler: Scheduler | None = None,
) -> JobResult:
    """Generate, solve and post-process every task of a job."""
    if not isinstance(config, JobConfig):
        config = JobConfig.load(config)
    base = ingest_build_base(config.build_dir)
    generated = generate_tasks(config, base)
    tasks = [t for t, _sources in generated]
    sources_by_task = {t.id: sources for t, sources in generated}

    job = Job(id=config.name, name=config.name, tasks=tasks, priority=config.priority)
    if scheduler is None:
        scheduler = Scheduler(
            backend or MiniverBackend(), workers=workers or config.workers
        )
    result = JobResult(job=job, tasks=tasks)
    notify = on_event or (lambda event: None)
    notify({"type": "job_started", "job": job.id, "total": len(tasks)})

    coverage_by_spec: dict[str, list[dict]] = {}
    for task, verdict in scheduler.schedule([job]):
        outcome = TaskOutcome(task=task, verdict=verdict)
        if verdict.witness:
            try:
                trace = results_mod.parse_witness(
                    verdict.witness, task.program, task.line_map
                )
                outcome.trace = results_mod.annotate_relevance(
                    trace, sources_by_task.get(task.id, {})
                )
            except ForgeError as exc:
                outcome.verdict = Verdict(
                    "Unknown", reason=f"component-failure: witness processing: {exc}"
                )
        if verdict.coverage and task.line_map:
            outcome.coverage = results_mod.map_coverage(verdict.coverage, task.line_map)
            coverage_by_spec.setdefault(task.requirement, []).append(outcome.coverage)
        result.outcomes.append(outcome)
        notify(
            {
                "type": "task_solved",
                "job": job.id,
                "task": task.id,
                "verdict": outcome.verdict.kind,
                "solved": len(result.outcomes),
                "total": len(tasks),
                "outcome": outcome,
            }
        )

    for requirement, reports in coverage_by_spec.items():
        result.coverage[requirement] = results_mod.merge_coverage(reports, base)
    result.statistics = results_mod.verdict_statistics(
        [o.verdict for o in result.outcomes]
    )
    notify({"type": "job_finished", "job": job.id})
    return result

"""Scheduling of verification jobs and tasks.

A dispatcher with a bounded worker pool solves tasks against a pluggable
backend: strictly higher priority starts first, FIFO within a priority with
round-robin interleaving across jobs, verdicts stream out as they complete.
Supports cancellation, resource-limited subprocess runs and speculative
first attempts at half the memory limit.
"""

from __future__ import annotations

import heapq
import json
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import psutil

from .errors import SchedulerError

_POLL_INTERVAL = 0.02
MEASUREMENT_SLACK_SECONDS = 0.5


@dataclass
class ResourceLimits:
    cpu_seconds: float = 270.0
    wall_seconds: float = 300.0
    memory_bytes: int = 1_000_000_000
    cores: int = 1

    @classmethod
    def from_dict(cls, doc: dict) -> "ResourceLimits":
        return cls(
            cpu_seconds=doc.get("cpu_seconds", 270.0),
            wall_seconds=doc.get("wall_seconds", 300.0),
            memory_bytes=doc.get("memory_bytes", 1_000_000_000),
            cores=doc.get("cores", 1),
        )

    def halved_memory(self) -> "ResourceLimits":
        return ResourceLimits(
            self.cpu_seconds, self.wall_seconds, max(1, self.memory_bytes // 2), self.cores
        )


@dataclass
class RunMeasurement:
    cpu_seconds: float = 0.0
    wall_seconds: float = 0.0
    peak_memory_bytes: int = 0
    exit_status: int | None = None
    terminated_by: str = "none"  # none | cpu | wall | memory


@dataclass
class Verdict:
    kind: str  # Safe | Unsafe | Unknown
    reason: str = ""  # for Unknown: timeout | out-of-memory | tool-failure | component-failure
    witness: str | None = None
    coverage: dict | None = None

    def __post_init__(self):
        if self.kind == "Unsafe" and self.witness is None:
            raise ValueError("an Unsafe verdict requires a witness")


@dataclass
class Job:
    id: str
    name: str
    tasks: list = field(default_factory=list)
    state: str = "pending"  # pending -> running -> done | cancelled
    created_at: float = field(default_factory=time.time)
    priority: int = 0
    started_at: float | None = None
    finished_at: float | None = None

    def transition(self, state: str) -> None:
        allowed = {
            "pending": {"running", "cancelled"},
            "running": {"done", "cancelled"},
            "done": set(),
            "cancelled": set(),
        }
        if state not in allowed[self.state]:
            raise SchedulerError(f"illegal job transition {self.state} -> {state}")
        self.state = state


def _process_tree(pid: int):
    try:
        root = psutil.Process(pid)
        return [root] + root.children(recursive=True)
    except psutil.NoSuchProcess:
        return []


def run_with_limits(command, limits: ResourceLimits, cwd=None, cancel_event=None) -> RunMeasurement:
    """Run a command, terminating it when any resource limit is exceeded."""
    try:
        proc = subprocess.Popen(
            command, cwd=cwd, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL
        )
    except OSError as exc:
        raise SchedulerError(f"cannot spawn {command!r}: {exc}")

    start = time.monotonic()
    measurement = RunMeasurement()
    terminated_by = "none"
    while True:
        status = proc.poll()
        if status is not None:
            measurement.exit_status = status
            break
        if cancel_event is not None and cancel_event.is_set():
            _kill_tree(proc)
            measurement.exit_status = proc.wait()
            terminated_by = "cancelled"
            break
        cpu = 0.0
        rss = 0
        for p in _process_tree(proc.pid):
            try:
                times = p.cpu_times()
                cpu += times.user + times.system
                rss += p.memory_info().rss
            except psutil.NoSuchProcess:
                continue
        wall = time.monotonic() - start
        measurement.cpu_seconds = cpu
        measurement.wall_seconds = wall
        measurement.peak_memory_bytes = max(measurement.peak_memory_bytes, rss)
        if cpu > limits.cpu_seconds:
            terminated_by = "cpu"
        elif wall > limits.wall_seconds:
            terminated_by = "wall"
        elif rss > limits.memory_bytes:
            terminated_by = "memory"
        if terminated_by != "none":
            _kill_tree(proc)
            measurement.exit_status = proc.wait()
            break
        time.sleep(_POLL_INTERVAL)
    measurement.wall_seconds = time.monotonic() - start
    measurement.terminated_by = terminated_by
    return measurement


def _kill_tree(proc: subprocess.Popen) -> None:
    for p in _process_tree(proc.pid):
        try:
            p.kill()
        except psutil.NoSuchProcess:
            pass
    try:
        proc.kill()
    except OSError:
        pass


class CallableBackend:
    """Test-friendly backend delegating to a Python callable.

    The callable receives (task, limits, cancel_event) and returns a Verdict
    or a (Verdict, RunMeasurement) pair.
    """

    def __init__(self, fn):
        self.fn = fn

    def solve(self, task, limits, cancel_event):
        out = self.fn(task, limits, cancel_event)
        if isinstance(out, tuple):
            return out
        return out, RunMeasurement()


class MiniverBackend:
    """In-process bundled checker."""

    def __init__(self, bounds=None):
        self.bounds = bounds

    def solve(self, task, limits, cancel_event):
        from .miniver import check

        started = time.monotonic()
        result = check(task.program, task.property_file, bounds=self.bounds)
        verdict = Verdict(
            kind=result.verdict.kind,
            reason=result.verdict.reason,
            witness=result.witness,
            coverage=result.coverage,
        )
        return verdict, RunMeasurement(wall_seconds=time.monotonic() - started)


class CommandBackend:
    """External command receiving a task directory (the adapter contract).

    The command must write ``verdict.txt`` with ``SAFE``, ``UNSAFE`` or
    ``UNKNOWN <reason>`` plus optional ``witness.graphml``/``coverage.json``.
    """

    def __init__(self, argv, keep_dirs: bool = False):
        self.argv = list(argv)
        self.keep_dirs = keep_dirs

    def solve(self, task, limits, cancel_event):
        from .taskgen import write_task_dir

        tmp = Path(tempfile.mkdtemp(prefix="forge-task-"))
        write_task_dir(task, tmp)
        measurement = run_with_limits(self.argv + [str(tmp)], limits, cancel_event=cancel_event)
        verdict_file = tmp / "verdict.txt"
        if measurement.terminated_by == "cancelled":
            return Verdict("Unknown", reason="component-failure: cancelled"), measurement
        if measurement.terminated_by != "none":
            reason = {"cpu": "timeout", "wall": "timeout", "memory": "out-of-memory"}[
                measurement.terminated_by
            ]
            return Verdict("Unknown", reason=reason), measurement
        if not verdict_file.exists():
            return Verdict("Unknown", reason="tool-failure: no verdict written"), measurement
        parts = verdict_file.read_text().strip().split(None, 1)
        kind = {"SAFE": "Safe", "UNSAFE": "Unsafe", "UNKNOWN": "Unknown"}.get(
            parts[0] if parts else "", "Unknown"
        )
        reason = parts[1] if len(parts) > 1 else ""
        witness = None
        coverage = None
        wfile = tmp / "witness.graphml"
        if wfile.exists():
            witness = wfile.read_text()
        cfile = tmp / "coverage.json"
        if cfile.exists():
            coverage = json.loads(cfile.read_text())
        if kind == "Unsafe" and witness is None:
            return Verdict("Unknown", reason="tool-failure: unsafe without witness"), measurement
        return Verdict(kind, reason=reason, witness=witness, coverage=coverage), measurement


@dataclass
class SpeculativeResult:
    verdict: Verdict
    measurement: RunMeasurement
    attempts: list  # (limits, verdict, measurement) per attempt


def speculative_run(task, backend, limits: ResourceLimits, cancel_event=None) -> SpeculativeResult:
    """First attempt at half the memory limit; rerun once at full limits only
    when the cheap attempt ran out of memory."""
    cancel_event = cancel_event or threading.Event()
    half = limits.halved_memory()
    try:
        verdict, measurement = backend.solve(task, half, cancel_event)
    except Exception as exc:  # backend crash is a verdict, not a scheduler error
        verdict, measurement = Verdict("Unknown", reason=f"tool-failure: {exc}"), RunMeasurement()
    attempts = [(half, verdict, measurement)]
    if verdict.kind == "Unknown" and verdict.reason.startswith("out-of-memory"):
        try:
            verdict, measurement = backend.solve(task, limits, cancel_event)
        except Exception as exc:
            verdict, measurement = (
                Verdict("Unknown", reason=f"tool-failure: {exc}"),
                RunMeasurement(),
            )
        attempts.append((limits, verdict, measurement))
    return SpeculativeResult(verdict, measurement, attempts)


class Scheduler:
    """Bounded worker pool with priority dispatch and cancellation."""

    def __init__(self, backend, workers: int = 1, speculate: bool = False,
                 limits: ResourceLimits | None = None):
        if workers < 1:
            raise SchedulerError("at least one worker is required")
        self.backend = backend
        self.workers = workers
        self.speculate = speculate
        self.default_limits = limits or ResourceLimits()
        self._lock = threading.Lock()
        self._ready: list = []
        self._cancelled_jobs: set[str] = set()
        self._cancel_events: dict[str, threading.Event] = {}
        self._jobs: dict[str, Job] = {}
        self.dispatch_log: list[tuple[str, list[int]]] = []
        self.task_states: dict[str, str] = {}

    def cancel(self, job_id: str) -> None:
        """Idempotent: pending tasks become cancelled, running ones are signalled."""
        with self._lock:
            self._cancelled_jobs.add(job_id)
            job = self._jobs.get(job_id)
            if job is not None and job.state in ("pending", "running"):
                job.transition("cancelled")
            event = self._cancel_events.get(job_id)
        if event is not None:
            event.set()

    def schedule(self, jobs: list[Job]):
        """Solve all tasks of the given jobs; yields (task, Verdict) as they
        complete."""
        import queue

        results: "queue.Queue" = queue.Queue()
        expected = 0
        with self._lock:
            for job in jobs:
                self._jobs[job.id] = job
                self._cancel_events.setdefault(job.id, threading.Event())
                if job.id in self._cancelled_jobs:
                    if job.state in ("pending", "running"):
                        job.transition("cancelled")
                elif job.state == "pending":
                    job.transition("running")
                    job.started_at = time.time()
            # round-robin interleave across jobs for fairness at equal priority
            seq = 0
            index = 0
            while True:
                added = False
                for job in jobs:
                    if index < len(job.tasks):
                        task = job.tasks[index]
                        priority = getattr(task, "priority", 0) or job.priority
                        heapq.heappush(self._ready, (-priority, seq, job.id, task))
                        self.task_states[task.id] = "pending"
                        seq += 1
                        expected += 1
                        added = True
                if not added:
                    break
                index += 1

        stop = threading.Event()

        def worker():
            while not stop.is_set():
                with self._lock:
                    if not self._ready:
                        return
                    neg_priority, _seq, job_id, task = heapq.heappop(self._ready)
                    if job_id in self._cancelled_jobs:
                        self.task_states[task.id] = "cancelled"
                        results.put(("cancelled", task, None))
                        continue
                    snapshot = [-p for p, _s, _j, _t in self._ready]
                    self.dispatch_log.append((task.id, [-neg_priority] + snapshot))
                    self.task_states[task.id] = "running"
                    event = self._cancel_events[job_id]
                limits = self._task_limits(task)
                try:
                    if self.speculate:
                        outcome = speculative_run(task, self.backend, limits, event)
                        verdict = outcome.verdict
                    else:
                        verdict, _measurement = self.backend.solve(task, limits, event)
                except Exception as exc:
                    verdict = Verdict("Unknown", reason=f"component-failure: {exc}")
                with self._lock:
                    if job_id in self._cancelled_jobs:
                        self.task_states[task.id] = "cancelled"
                        results.put(("cancelled", task, None))
                        continue
                    self.task_states[task.id] = "solved"
                results.put(("solved", task, verdict))

        threads = [threading.Thread(target=worker, daemon=True) for _ in range(self.workers)]
        for t in threads:
            t.start()
        try:
            remaining = expected
            while remaining > 0:
                status, task, verdict = results.get()
                remaining -= 1
                if status == "solved":
                    yield task, verdict
        finally:
            stop.set()
            for t in threads:
                t.join(timeout=5)
            with self._lock:
                for job in jobs:
                    if job.state == "running":
                        job.transition("done")
                        job.finished_at = time.time()

    def _task_limits(self, task) -> ResourceLimits:
        doc = getattr(task, "limits", None)
        if isinstance(doc, dict):
            return ResourceLimits.from_dict(doc)
        if isinstance(doc, ResourceLimits):
            return doc
        return self.default_limits


def schedule(jobs: list[Job], workers: int, backend, **kwargs):
    """One-shot scheduling of jobs over a backend; yields (task, Verdict)."""
    scheduler = Scheduler(backend, workers=workers, **kwargs)
    yield from scheduler.schedule(jobs)


def estimate_progress(job: Job, history: list[float] | None = None) -> dict:
    """Progress snapshot: solved/total counts, elapsed wall time and the
    mean-solution-time remaining estimate (unknown before any completion)."""
    history = history or []
    total = len(job.tasks)
    solved = len(history)
    elapsed = 0.0
    if job.started_at is not None:
        elapsed = (job.finished_at or time.time()) - job.started_at
    if solved == 0:
        remaining = None
    else:
        remaining = (sum(history) / solved) * (total - solved)
    return {
        "solved": solved,
        "total": total,
        "elapsed": elapsed,
        "remaining_estimate": remaining,
    }

"""HTTP/JSON service over jobs, results, traces, coverage and marks.

Persistence is one JSON file with atomic-rename saves; all writes are
serialized through a single lock, and scheduler events reach the store
through the same writer.  Results polling is long-poll friendly via a
``since`` cursor.
"""

from __future__ import annotations

import json
import os
import shutil
import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse, PlainTextResponse

from . import results as results_mod
from .pipeline import PRESETS_DIR, JobConfig, run_job
from .sched import Scheduler, MiniverBackend


class Store:
    """Single-file persistent state with one writer."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path = self.directory / "store.json"
        self.lock = threading.RLock()
        self.changed = threading.Condition(self.lock)
        self.data = {
            "jobs": {},
            "results": {},
            "traces": {},
            "coverage": {},
            "marks": {},
            "assessments": [],
        }
        if self.path.exists():
            self.data.update(json.loads(self.path.read_text()))

    def save(self) -> None:
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.data, indent=1))
        os.replace(tmp, self.path)

    def mutate(self, fn):
        with self.lock:
            out = fn(self.data)
            self.save()
            self.changed.notify_all()
            return out

    def view(self, fn):
        with self.lock:
            return fn(self.data)


def _trace_doc(trace: results_mod.ErrorTrace) -> dict:
    return {
        "events": [
            {
                "file": e.file,
                "line": e.line,
                "kind": e.kind,
                "text": e.text,
                "function": e.function,
                "relevant": e.relevant,
                "note": e.note,
                "assert_desc": e.assert_desc,
            }
            for e in trace.events
        ]
    }


def _trace_from_doc(doc: dict) -> results_mod.ErrorTrace:
    return results_mod.ErrorTrace(
        events=[results_mod.TraceEvent(**e) for e in doc.get("events", ())]
    )


def _coverage_doc(report: results_mod.CoverageReport) -> dict:
    def entry(fc):
        return {
            "lines_total": fc.lines_total,
            "lines_covered": fc.lines_covered,
            "functions_total": fc.functions_total,
            "functions_covered": fc.functions_covered,
            "covered_lines": sorted(fc.covered_line_set),
        }

    return {
        "files": {name: entry(fc) for name, fc in report.files.items()},
        "directories": {
            name: dict(entry(fc), line_percent=report.line_percent(name))
            for name, fc in report.directories.items()
        },
    }


def _template_files(name: str) -> dict[str, str]:
    root = PRESETS_DIR / name
    if not root.is_dir():
        raise HTTPException(400, detail=f"unknown template {name!r}")
    return {
        str(p.relative_to(root)): p.read_text()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def create_app(store_dir: Path, backend=None, workers: int = 2) -> FastAPI:
    store = Store(Path(store_dir))
    app = FastAPI(title="forge bridge")
    schedulers: dict[str, Scheduler] = {}
    runner_threads: dict[str, threading.Thread] = {}

    def error(status: int, message: str):
        return JSONResponse(
            status_code=status, content={"code": status, "message": message}
        )

    @app.exception_handler(HTTPException)
    async def handle_http_error(_request, exc: HTTPException):
        return error(exc.status_code, str(exc.detail))

    def get_job(data, job_id: str) -> dict:
        job = data["jobs"].get(job_id)
        if job is None:
            raise HTTPException(404, detail=f"no job {job_id!r}")
        return job

    @app.post("/jobs", status_code=201)
    def create_job(body: dict):
        files: dict[str, str] = {}
        if body.get("template"):
            files.update(_template_files(body["template"]))
        if body.get("clone"):
            source = store.view(lambda d: get_job(d, body["clone"]))
            files.update(source["files"])
        files.update(body.get("files", {}))
        if not files:
            raise HTTPException(400, detail="a job needs a template, a clone or files")
        job_id = uuid.uuid4().hex[:12]
        record = {
            "id": job_id,
            "name": body.get("name", job_id),
            "author": body.get("author", ""),
            "access": body.get("access", "private"),
            "created_at": time.time(),
            "state": "pending",
            "files": files,
            "total": 0,
            "solved": 0,
            "started_at": None,
            "finished_at": None,
            "priority": body.get("priority", 0),
        }
        store.mutate(lambda d: d["jobs"].__setitem__(job_id, record))
        return record

    @app.get("/jobs")
    def list_jobs(access: str | None = None, limit: int = 100):
        def view(data):
            jobs = sorted(data["jobs"].values(), key=lambda j: j["created_at"])
            if access:
                jobs = [j for j in jobs if j["access"] == access]
            return [{k: v for k, v in j.items() if k != "files"} for j in jobs[:limit]]

        return store.view(view)

    @app.get("/jobs/{job_id}")
    def show_job(job_id: str):
        return store.view(lambda d: get_job(d, job_id))

    @app.get("/jobs/{job_id}/files/{path:path}")
    def job_file(job_id: str, path: str):
        job = store.view(lambda d: get_job(d, job_id))
        if path not in job["files"]:
            raise HTTPException(404, detail=f"job has no file {path!r}")
        return PlainTextResponse(job["files"][path])

    def _runner(job_id: str):
        workspace = store.directory / "workspaces" / job_id
        try:
            job = store.view(lambda d: dict(get_job(d, job_id)))
            if workspace.exists():
                shutil.rmtree(workspace)
            for name, text in job["files"].items():
                target = workspace / name
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(text)
            config = JobConfig.load(workspace)
            config.name = job_id

            def on_event(event):
                def apply(data):
                    record = data["jobs"].get(job_id)
                    if record is None:
                        return
                    if event["type"] == "job_started":
                        record["total"] = event["total"]
                    elif event["type"] == "task_solved":
                        record["solved"] = event["solved"]
                        outcome = event["outcome"]
                        bucket = data["results"].setdefault(job_id, [])
                        bucket.append(
                            {
                                "seq": len(bucket),
                                "task": outcome.task.id,
                                "fragment": outcome.task.fragment,
                                "requirement": outcome.task.requirement,
                                "verdict": outcome.verdict.kind,
                                "reason": outcome.verdict.reason,
                                "has_trace": outcome.trace is not None,
                            }
                        )
                        if outcome.trace is not None:
                            data["traces"][outcome.task.id] = _trace_doc(outcome.trace)

                store.mutate(apply)

            scheduler = schedulers[job_id]
            result = run_job(config, scheduler=scheduler, on_event=on_event)

            def finish(data):
                record = data["jobs"].get(job_id)
                if record is None:
                    return
                data["coverage"][job_id] = {
                    req: _coverage_doc(report)
                    for req, report in result.coverage.items()
                }
                record["state"] = (
                    "cancelled" if result.job.state == "cancelled" else "done"
                )
                record["finished_at"] = time.time()
                record["statistics"] = result.statistics
                _assess_all(data)

            store.mutate(finish)
        except Exception as exc:  # surface failures as a job-level state
            message = f"{type(exc).__name__}: {exc}"

            def fail(data):
                record = data["jobs"].get(job_id)
                if record is not None:
                    record["state"] = "failed"
                    record["error"] = message

            store.mutate(fail)

    @app.post("/jobs/{job_id}/start")
    def start_job(job_id: str):
        def begin(data):
            record = get_job(data, job_id)
            if record["state"] != "pending":
                raise HTTPException(409, detail=f"job is {record['state']}, not pending")
            record["state"] = "running"
            record["started_at"] = time.time()
            return dict(record)

        record = store.mutate(begin)
        schedulers[job_id] = Scheduler(backend or MiniverBackend(), workers=workers)
        thread = threading.Thread(target=_runner, args=(job_id,), daemon=True)
        runner_threads[job_id] = thread
        thread.start()
        return record

    @app.post("/jobs/{job_id}/cancel")
    def cancel_job(job_id: str):
        def mark(data):
            record = get_job(data, job_id)
            if record["state"] in ("pending", "running"):
                record["state"] = "cancelled"
            return dict(record)

        record = store.mutate(mark)
        scheduler = schedulers.get(job_id)
        if scheduler is not None:
            scheduler.cancel(job_id)
        return record

    @app.get("/jobs/{job_id}/progress")
    def progress(job_id: str):
        def view(data):
            record = get_job(data, job_id)
            solved, total = record["solved"], record["total"]
            elapsed = 0.0
            if record["started_at"]:
                elapsed = (record["finished_at"] or time.time()) - record["started_at"]
            if solved and total and record["state"] == "running":
                remaining = elapsed / solved * (total - solved)
            elif record["state"] in ("done", "cancelled"):
                remaining = 0.0
            else:
                remaining = None
            return {
                "state": record["state"],
                "solved": solved,
                "total": total,
                "elapsed": elapsed,
                "remaining_estimate": remaining,
            }

        return store.view(view)

    @app.get("/jobs/{job_id}/results")
    def job_results(job_id: str, since: int = 0, limit: int = 100, wait: float = 0.0):
        deadline = time.monotonic() + min(wait, 25.0)
        while True:
            with store.lock:
                record = get_job(store.data, job_id)
                bucket = store.data["results"].get(job_id, [])
                fresh = [r for r in bucket if r["seq"] >= since][:limit]
                if fresh or record["state"] in ("done", "cancelled", "failed"):
                    return {
                        "results": fresh,
                        "next": (fresh[-1]["seq"] + 1) if fresh else since,
                        "state": record["state"],
                    }
                timeout = deadline - time.monotonic()
                if timeout <= 0:
                    return {"results": [], "next": since, "state": record["state"]}
                store.changed.wait(timeout=min(timeout, 0.5))

    @app.get("/tasks/{task_id:path}/trace")
    def task_trace(task_id: str):
        doc = store.view(lambda d: d["traces"].get(task_id))
        if doc is None:
            raise HTTPException(404, detail=f"no trace for task {task_id!r}")
        return doc

    @app.get("/jobs/{job_id}/coverage")
    def job_coverage(job_id: str):
        def view(data):
            get_job(data, job_id)
            return data["coverage"].get(job_id, {})

        return store.view(view)

    @app.get("/jobs/{a}/diff/{b}")
    def diff(a: str, b: str):
        def view(data):
            ja, jb = get_job(data, a), get_job(data, b)
            files_a, files_b = set(ja["files"]), set(jb["files"])
            changed = sorted(
                f for f in files_a & files_b if ja["files"][f] != jb["files"][f]
            )
            ra = {r["task"]: r["verdict"] for r in data["results"].get(a, [])}
            rb = {r["task"]: r["verdict"] for r in data["results"].get(b, [])}
            verdict_delta = {
                task: [ra[task], rb[task]]
                for task in sorted(set(ra) & set(rb))
                if ra[task] != rb[task]
            }
            return {
                "files": {
                    "added": sorted(files_b - files_a),
                    "removed": sorted(files_a - files_b),
                    "changed": changed,
                },
                "verdicts": {
                    "changed": verdict_delta,
                    "only_left": sorted(set(ra) - set(rb)),
                    "only_right": sorted(set(rb) - set(ra)),
                },
            }

        return store.view(view)

    def _signature_of_task(data, task_id: str):
        doc = data["traces"].get(task_id)
        if doc is not None:
            return list(map(list, results_mod.mark_signature(_trace_from_doc(doc))))
        for bucket in data["results"].values():
            for entry in bucket:
                if entry["task"] == task_id and entry["verdict"] == "Unknown":
                    return results_mod.failure_signature(entry.get("reason", ""))
        raise HTTPException(404, detail=f"no trace or failure for task {task_id!r}")

    def _assess_all(data) -> list[dict]:
        """Recompute automatic assessments for every stored result."""
        marks = data["marks"].values()
        manual = [a for a in data["assessments"] if a["mode"] == "manual"]
        automatic: list[dict] = []
        for task_id, doc in data["traces"].items():
            signature = list(map(list, results_mod.mark_signature(_trace_from_doc(doc))))
            for mark in marks:
                if mark["signature"] == signature:
                    automatic.append(
                        {"task": task_id, "mark": mark["id"], "mode": "automatic"}
                    )
        for bucket in data["results"].values():
            for entry in bucket:
                if entry["verdict"] != "Unknown":
                    continue
                signature = results_mod.failure_signature(entry.get("reason", ""))
                for mark in marks:
                    if mark["signature"] == signature:
                        automatic.append(
                            {"task": entry["task"], "mark": mark["id"], "mode": "automatic"}
                        )
        manual_keys = {(a["task"], a["mark"]) for a in manual}
        deduped = []
        seen = set()
        for a in automatic:
            key = (a["task"], a["mark"])
            if key in seen or key in manual_keys:
                continue
            seen.add(key)
            deduped.append(a)
        data["assessments"] = manual + deduped
        return deduped

    @app.post("/marks", status_code=201)
    def create_mark(body: dict):
        for key in ("verdict_class", "description"):
            if not body.get(key):
                raise HTTPException(400, detail=f"mark needs a {key}")
        task_id = body.get("task_id")
        if not task_id and "signature" not in body:
            raise HTTPException(400, detail="mark needs a task_id or a signature")

        def apply(data):
            signature = body.get("signature") or _signature_of_task(data, task_id)
            mark_id = uuid.uuid4().hex[:12]
            record = {
                "id": mark_id,
                "verdict_class": body["verdict_class"],
                "description": body["description"],
                "tags": body.get("tags", []),
                "signature": signature,
                "history": [],
            }
            data["marks"][mark_id] = record
            _assess_all(data)
            return record

        return store.mutate(apply)

    @app.get("/marks")
    def list_marks():
        return store.view(lambda d: sorted(d["marks"].values(), key=lambda m: m["id"]))

    @app.get("/marks/{mark_id}")
    def show_mark(mark_id: str):
        mark = store.view(lambda d: d["marks"].get(mark_id))
        if mark is None:
            raise HTTPException(404, detail=f"no mark {mark_id!r}")
        return mark

    @app.put("/marks/{mark_id}")
    def edit_mark(mark_id: str, body: dict):
        def apply(data):
            mark = data["marks"].get(mark_id)
            if mark is None:
                raise HTTPException(404, detail=f"no mark {mark_id!r}")
            mark["history"].append(
                {
                    "verdict_class": mark["verdict_class"],
                    "description": mark["description"],
                    "tags": list(mark["tags"]),
                }
            )
            for key in ("verdict_class", "description", "tags"):
                if key in body:
                    mark[key] = body[key]
            _assess_all(data)
            return mark

        return store.mutate(apply)

    @app.get("/marks/{mark_id}/associations")
    def associations(mark_id: str):
        def view(data):
            if mark_id not in data["marks"]:
                raise HTTPException(404, detail=f"no mark {mark_id!r}")
            return [a for a in data["assessments"] if a["mark"] == mark_id]

        return store.view(view)

    @app.get("/jobs/{job_id}/statistics")
    def statistics(job_id: str):
        def view(data):
            record = get_job(data, job_id)
            return record.get("statistics", {})

        return store.view(view)

    app.state.store = store
    app.state.schedulers = schedulers
    return app

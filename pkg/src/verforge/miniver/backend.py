"""Task-directory adapter: the backend contract of the scheduler.

Reads the four-file bundle from a directory, runs the checker and writes
``verdict.txt`` (``SAFE|UNSAFE|UNKNOWN <reason>``), plus ``witness.graphml``
and ``coverage.json`` when available.
"""

from __future__ import annotations

import json
from pathlib import Path

from .interp import Bounds, check


def solve_task_dir(task_dir: str | Path, bounds: Bounds | None = None) -> str:
    task_dir = Path(task_dir)
    program = (task_dir / "cil.i").read_text()
    prop = (task_dir / "safe-prps.prp").read_text()
    result = check(program, prop, bounds=bounds)
    kind = result.verdict.kind
    if kind == "Unknown":
        reason = result.verdict.reason.split(":", 1)[0] or "tool-failure"
        line = f"UNKNOWN {reason}"
    else:
        line = kind.upper()
    (task_dir / "verdict.txt").write_text(line + "\n")
    if result.witness:
        (task_dir / "witness.graphml").write_text(result.witness)
    if result.coverage:
        (task_dir / "coverage.json").write_text(json.dumps(result.coverage, indent=1))
    return line

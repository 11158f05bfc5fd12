"""Bundled bounded explicit-state reachability checker."""

from .backend import solve_task_dir
from .interp import (
    Bounds,
    CheckResult,
    MiniVerdict,
    TraceEvent,
    check,
    emit_witness,
    explore,
    parse_property,
    replay,
)
from .parser import parse_program

__all__ = [
    "Bounds", "CheckResult", "MiniVerdict", "TraceEvent", "check",
    "emit_witness", "explore", "parse_program", "parse_property", "replay",
    "solve_task_dir",
]

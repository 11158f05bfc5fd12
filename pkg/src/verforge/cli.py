"""The ``forge`` command line: build-base ingestion, decomposition, weaving,
job solving, the bundled checker backend and the HTTP service."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .buildbase import base_from_json, base_to_json, ingest_build_base
from .errors import ForgeError
from .pfg import DecompositionSpec, PfgConfig, decompose, fragments_from_json, fragments_to_json
from .weave import merge, parse_aspect, weave


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="forge",
        description="Prepare C programs for automatic verification and solve the tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("buildbase", help="ingest build information into a build base")
    p.add_argument("--dir", required=True, help="directory with build_base.json or compile_commands.json")
    p.add_argument("--out", required=True, help="output build-base JSON file")

    p = sub.add_parser("decompose", help="decompose a program into fragments")
    p.add_argument("--base", required=True, help="build-base JSON from 'forge buildbase'")
    p.add_argument("--conf", required=True, help="decomposition configuration JSON")
    p.add_argument("--spec", help="optional decomposition specification JSON")
    p.add_argument("--version", help="version key inside the decomposition specification")
    p.add_argument("--out", required=True, help="output fragments JSON")

    p = sub.add_parser("weave", help="weave aspects over a fragment and merge to one unit")
    p.add_argument("--base", required=True, help="build-base JSON")
    p.add_argument("--fragments", required=True, help="fragments JSON from 'forge decompose'")
    p.add_argument("--fragment", required=True, help="fragment name to weave")
    p.add_argument("--aspects", nargs="*", default=[], help="aspect files")
    p.add_argument("--extra", nargs="*", default=[], help="extra C sources appended to the merge")
    p.add_argument("--out", required=True, help="output merged C file")

    p = sub.add_parser("run", help="solve a verification job")
    p.add_argument("--job", required=True, help="job directory or job.json")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", help="write results JSON here")

    p = sub.add_parser("miniver", help="bundled checker over a task directory")
    p.add_argument("task_dir", help="directory with cil.i and safe-prps.prp")
    p.add_argument("--loop-bound", type=int, default=16)
    p.add_argument("--nondet-values", default="0,1")

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--store", required=True, help="state directory")
    p.add_argument("--port", type=int, default=8090)
    p.add_argument("--host", default="127.0.0.1")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ForgeError as exc:
        print(f"forge: error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "buildbase":
        base = ingest_build_base(args.dir)
        Path(args.out).write_text(json.dumps(base_to_json(base), indent=1) + "\n")
        print(f"{len(base.cc_commands)} compile commands, "
              f"{len(base.callgraph.definitions)} functions")
        return 0

    if args.command == "decompose":
        base = base_from_json(json.loads(Path(args.base).read_text()))
        conf = PfgConfig.from_document(json.loads(Path(args.conf).read_text()))
        spec = None
        if args.spec:
            spec = DecompositionSpec.from_document(
                json.loads(Path(args.spec).read_text()), args.version
            )
        fragments = decompose(conf, base, spec)
        Path(args.out).write_text(json.dumps(fragments_to_json(fragments), indent=1) + "\n")
        for fragment in fragments:
            print(f"{fragment.name}: {len(fragment.files)} files")
        return 0

    if args.command == "weave":
        base = base_from_json(json.loads(Path(args.base).read_text()))
        fragments = {
            f.name: f for f in fragments_from_json(json.loads(Path(args.fragments).read_text()))
        }
        try:
            fragment = fragments[args.fragment]
        except KeyError:
            raise ForgeError(f"unknown fragment {args.fragment!r}")
        advice = []
        for aspect_path in args.aspects:
            advice.extend(parse_aspect(Path(aspect_path).read_text()))
        inputs = []
        for path in fragment.files:
            woven, report = weave(base.read_source(path), advice)
            inputs.append((path, woven, report.line_origins or None))
        for extra in args.extra:
            inputs.append((extra, Path(extra).read_text()))
        merged = merge(inputs)
        Path(args.out).write_text(merged.text)
        print(f"{args.out}: {len(merged.text.splitlines())} lines, "
              f"{len(merged.removed_functions)} functions pruned")
        return 0

    if args.command == "run":
        from .pipeline import run_job

        result = run_job(args.job, workers=args.workers)
        for outcome in result.outcomes:
            line = f"{outcome.task.id}: {outcome.verdict.kind}"
            if outcome.verdict.reason:
                line += f" ({outcome.verdict.reason})"
            print(line)
        if args.out:
            doc = {
                "job": result.job.id,
                "verdicts": result.verdicts,
                "statistics": result.statistics,
            }
            Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
        return 0 if all(o.verdict.kind != "Unknown" for o in result.outcomes) else 2

    if args.command == "miniver":
        from .miniver import Bounds, solve_task_dir

        values = tuple(int(v) for v in args.nondet_values.split(","))
        bounds = Bounds(loop_bound=args.loop_bound, nondet_values=values)
        print(solve_task_dir(args.task_dir, bounds=bounds))
        return 0

    if args.command == "serve":
        import uvicorn

        from .bridge import create_app

        app = create_app(Path(args.store))
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    raise ForgeError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())

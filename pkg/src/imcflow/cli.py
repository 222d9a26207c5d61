"""Command line: ``imcflow run | resume | verify``.

Exit codes:

    0  success
    1  unexpected failure
    2  scenario parse error (malformed TOML)
    3  scenario validation error
    4  g lost positive-definiteness
    5  numerical instability (non-finite values)
    6  gauge map left the patch
    7  verification suite failed
    8  unreadable or incompatible checkpoint
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import CheckpointError, FlowError, ParseError, ScenarioError
from .runner import (EXIT_CHECKPOINT, EXIT_FAILURE, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION,
                     EXIT_VERIFY, resume_checkpoint, run_file)

log = logging.getLogger("imcflow")


def _run_one(path: str, out_root: str) -> tuple[str, int, str]:
    try:
        outcome = run_file(path, out_root)
    except ParseError as exc:
        return path, EXIT_PARSE, str(exc)
    except ScenarioError as exc:
        return path, EXIT_VALIDATION, "\n".join(str(e) for e in exc.errors)
    except FlowError as exc:
        return path, EXIT_FAILURE, str(exc)
    s = outcome.summary
    return path, outcome.exit_code, f"{s['termination']} at t={s['t_final']:.6g} -> {outcome.out_dir}"


def cmd_run(args) -> int:
    jobs = max(1, args.jobs)
    paths = [str(p) for p in args.scenario]
    if jobs == 1 or len(paths) == 1:
        results = [_run_one(p, args.output_dir) for p in paths]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, paths, [args.output_dir] * len(paths)))
    worst = EXIT_OK
    for path, code, msg in results:
        stream = sys.stdout if code == EXIT_OK else sys.stderr
        print(f"{path}: exit {code}: {msg}", file=stream)
        if code != EXIT_OK and worst == EXIT_OK:
            worst = code
    return worst


def cmd_resume(args) -> int:
    try:
        outcome = resume_checkpoint(args.checkpoint, args.output_dir)
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (ParseError, ScenarioError) as exc:
        print(f"embedded scenario is invalid: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    s = outcome.summary
    print(f"resumed from step {s['start_step']}: {s['termination']} at t={s['t_final']:.6g}")
    return outcome.exit_code


def cmd_verify(args) -> int:
    from .suites import SUITES, run_suite

    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_VALIDATION
    results = run_suite(args.suite, budget=not args.full)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="imcflow", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one or more scenario files")
    r.add_argument("scenario", nargs="+", type=Path)
    r.add_argument("--output-dir", default="runs", help="root for per-scenario output directories")
    r.add_argument("--jobs", type=int, default=1, help="scenarios to run in parallel")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("resume", help="continue a run from a checkpoint")
    c.add_argument("checkpoint", type=Path)
    c.add_argument("--output-dir", default=None, help="defaults to the checkpoint's directory")
    c.set_defaults(func=cmd_resume)

    v = sub.add_parser("verify", help="run an acceptance suite and print pass/fail lines")
    v.add_argument("suite")
    v.add_argument("--full", action="store_true", help="use full-size grids instead of budget mode")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""``concsynth`` command line."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import dispatch, harness, sygus
from .dispatch import SolveOptions
from .errors import ConcSynthError, ParseError

EXIT_OK = 0
EXIT_UNKNOWN = 1
EXIT_ERROR = 2
EXIT_UNSOUND = 3

_EXIT_FOR = {
    dispatch.SOLVED: EXIT_OK,
    dispatch.NO_SOLUTION: EXIT_OK,
    dispatch.TIMEOUT: EXIT_UNKNOWN,
    dispatch.INCONCLUSIVE: EXIT_UNKNOWN,
    dispatch.ERROR: EXIT_ERROR,
    dispatch.UNSOUND: EXIT_UNSOUND,
}


def _add_common(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--engine", choices=dispatch.ENGINES, default="auto")
    ap.add_argument("--jobs", type=int, default=1, help="parallel height workers for the concolic engine")
    ap.add_argument("--timeout", type=float, default=60.0, help="seconds per problem (0 disables)")
    ap.add_argument("--smt-solver", metavar="PATH", help="SMT-LIB2 solver executable (default: $CONCSYNTH_SMT or z3)")
    ap.add_argument("--no-fragments", action="store_true", help="always use the concolic engine in auto mode")
    ap.add_argument("--max-height", type=int, default=12)
    ap.add_argument("--height-iter-cap", type=int, default=10_000, metavar="K")
    ap.add_argument("--no-height-cap", action="store_true", help="never give up on a height")
    ap.add_argument("--strict-grammar", action="store_true", help="reject grammars without ite or comparisons")
    ap.add_argument("--check-models", action="store_true", help="evaluate every SMT model against its query")
    ap.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="concsynth", description="CLIA synthesis and invariant inference")
    sub = ap.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="solve one problem")
    solve.add_argument("file")
    _add_common(solve)
    solve.add_argument("--stats", metavar="OUT.json", help="write run statistics as JSON")
    solve.add_argument("--dump-candidates", action="store_true", help="print candidates to stderr")
    solve.add_argument("--dump-graph", action="store_true", help="print the branch graph (DOT) to stderr")
    bench = sub.add_parser("bench", help="solve every .sl file under a directory")
    bench.add_argument("dir")
    _add_common(bench)
    bench.add_argument("--suite-jobs", type=int, default=1)
    bench.add_argument("--csv", metavar="OUT.csv")
    bench.add_argument("--json", metavar="OUT.json", nargs="?", const="-", help="JSON report (stdout if no path)")
    return ap


def _options(args) -> SolveOptions:
    return SolveOptions(
        engine=args.engine,
        jobs=args.jobs,
        timeout=args.timeout or None,
        solver=args.smt_solver,
        fragments=not args.no_fragments,
        max_height=args.max_height,
        iter_cap=None if args.no_height_cap else args.height_iter_cap,
        check_models=True if args.check_models else None,
        dump_candidates=getattr(args, "dump_candidates", False),
        dump_graph=getattr(args, "dump_graph", False),
    )


def cmd_solve(args) -> int:
    try:
        p = sygus.parse_file(args.file, strict_grammar=args.strict_grammar)
    except ParseError as exc:
        print(f"{args.file}:{exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ConcSynthError, OSError) as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = dispatch.solve(p, _options(args))
    if out.status in (dispatch.SOLVED, dispatch.UNSOUND):
        print(sygus.print_solution(p, out.solution))
    elif out.status == dispatch.NO_SOLUTION:
        print("infeasible")
        if out.witness:
            print(f"no solution; witness {out.witness}", file=sys.stderr)
    else:
        print("unknown")
    if out.message and out.status != dispatch.SOLVED:
        print(f"{out.status}: {out.message}", file=sys.stderr)
    if args.stats:
        data = {
            "file": args.file,
            "status": out.status,
            "engine": out.engine,
            "category": out.category,
            "fragment": out.fragment,
            "verified": out.verified,
            "witness": out.witness,
            **out.stats,
        }
        with open(args.stats, "w") as fh:
            json.dump(data, fh, indent=2)
    return _EXIT_FOR[out.status]


def cmd_bench(args) -> int:
    records = harness.run_suite(args.dir, _options(args), args.suite_jobs)
    for r in records:
        print(f"{r.status:<13} {r.engine:<9} {r.ms:>8} ms  {'verified' if r.verified else '-':<9} {r.path}", file=sys.stderr)
    print(harness.format_breakdown(records), file=sys.stderr)
    if args.csv:
        harness.write_csv(records, args.csv)
    if args.json:
        text = harness.to_json(records)
        if args.json == "-":
            print(text)
        else:
            with open(args.json, "w") as fh:
                fh.write(text)
    return EXIT_UNSOUND if any(r.status == dispatch.UNSOUND for r in records) else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))
    if args.command == "solve":
        return cmd_solve(args)
    return cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())

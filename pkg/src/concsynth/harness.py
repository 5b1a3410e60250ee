"""Benchmark runner: solve every ``.sl`` file in a directory and report."""

from __future__ import annotations

import csv
import json
import logging
import time
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from . import dispatch, sygus
from .dispatch import ERROR, UNSOUND, SolveOptions
from .errors import ConcSynthError

log = logging.getLogger(__name__)

CSV_COLUMNS = ("path", "category", "engine", "status", "ms", "verified")
CATEGORIES = ("CLIA(SSI)", "CLIA(non-SSI)", "INV(AT)", "INV(non-AT)")


@dataclass
class RunRecord:
    path: str
    category: str
    engine: str
    status: str
    ms: int
    verified: bool
    solution: str | None = None
    message: str = ""

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}


def run_one(path, opts: SolveOptions) -> RunRecord:
    t0 = time.monotonic()
    try:
        p = sygus.parse_file(path)
    except ConcSynthError as exc:
        ms = int((time.monotonic() - t0) * 1000)
        return RunRecord(str(path), "", opts.engine, ERROR, ms, False, message=f"{type(exc).__name__}: {exc}")
    out = dispatch.solve(p, opts)
    ms = int((time.monotonic() - t0) * 1000)
    text = None
    if out.solution is not None:
        text = sygus.print_solution(p, out.solution)
    elif out.status == dispatch.NO_SOLUTION:
        text = "infeasible"
    return RunRecord(str(path), out.category, out.engine, out.status, ms, out.verified, text, out.message)


def find_benchmarks(directory) -> list[Path]:
    return sorted(Path(directory).rglob("*.sl"))


def run_suite(directory, opts: SolveOptions | None = None, suite_jobs: int = 1) -> list[RunRecord]:
    opts = opts or SolveOptions()
    files = find_benchmarks(directory)
    if suite_jobs <= 1:
        records = []
        for f in files:
            records.append(run_one(f, opts))
            log.info("%s: %s", f, records[-1].status)
        return records
    with ThreadPoolExecutor(max_workers=suite_jobs) as pool:
        return list(pool.map(lambda f: run_one(f, opts), files))


def breakdown(records) -> dict:
    table: dict[str, Counter] = defaultdict(Counter)
    for r in records:
        table[r.category or "unparsed"][r.status] += 1
    return {k: dict(v) for k, v in table.items()}


def summary(records) -> dict:
    return {
        "total": len(records),
        "status": dict(Counter(r.status for r in records)),
        "verified": sum(r.verified for r in records),
        "unsound": sum(r.status == UNSOUND for r in records),
        "categories": breakdown(records),
    }


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in records:
            w.writerow(r.row())


def to_json(records) -> str:
    return json.dumps({"records": [asdict(r) for r in records], "summary": summary(records)}, indent=2)


def format_breakdown(records) -> str:
    table = breakdown(records)
    statuses = sorted({s for row in table.values() for s in row})
    lines = [f"{'category':<15}" + "".join(f"{s:>14}" for s in statuses) + f"{'total':>8}"]
    for cat in [c for c in CATEGORIES if c in table] + sorted(set(table) - set(CATEGORIES)):
        row = table[cat]
        lines.append(f"{cat:<15}" + "".join(f"{row.get(s, 0):>14}" for s in statuses) + f"{sum(row.values()):>8}")
    return "\n".join(lines)

"""Route a problem to an engine and check whatever comes back."""

from __future__ import annotations

import logging
import sys
import time
from dataclasses import dataclass, field

from . import at, clia, concolic, ssi
from .classify import Fragment, ProblemClass, category, classify
from .errors import (
    Cancelled,
    ConcSynthError,
    EngineInconclusive,
    FallbackRequired,
    HeightBudgetExhausted,
    NonUnitCoefficient,
    NoSolution,
    Timeout,
    UnsupportedProblem,
)
from .printer import to_sexpr
from .smt import FunDef, SmtSession

log = logging.getLogger(__name__)

SOLVED = "Solved"
NO_SOLUTION = "NoSolution"
TIMEOUT = "Timeout"
INCONCLUSIVE = "Inconclusive"
ERROR = "Error"
UNSOUND = "UNSOUND"

ENGINES = ("auto", "concolic", "ssi", "at")


@dataclass
class SolveOptions:
    engine: str = "auto"
    jobs: int = 1
    timeout: float | None = 60.0
    solver: str | None = None
    fragments: bool = True
    max_height: int = concolic.DEFAULT_MAX_HEIGHT
    iter_cap: int | None = concolic.DEFAULT_ITER_CAP
    check_models: bool | None = None
    dump_candidates: bool = False
    dump_graph: bool = False
    dump_stream: object = None


@dataclass
class Outcome:
    status: str
    engine: str
    solution: object = None
    verified: bool = False
    witness: dict | None = None
    evidence: object = None
    category: str = ""
    fragment: str = ""
    message: str = ""
    stats: dict = field(default_factory=dict)


VERIFY_TIMEOUT_MS = 60_000


def verify_solution(p, sol, solver: str | None = None, timeout_ms: int = VERIFY_TIMEOUT_MS) -> bool | None:
    """Independent check of ``sol`` against the problem's verification spec, in a fresh solver."""
    with SmtSession(solver, timeout_ms=timeout_ms) as s:
        v = s.check_valid(
            p.check_spec, defs={p.fname: FunDef(tuple(p.params), sol, p.return_sort)}, presolve=True
        )
    return v.valid


def audit_no_solution(p, out: Outcome, solver: str | None = None) -> bool | None:
    """Re-check a nonexistence claim from its evidence; None when the evidence cannot be checked."""
    ev = out.evidence
    if not ev or out.witness is None:
        return None
    kind = ev[0]
    if kind == "single-invocation":
        _, formula, z = ev
        point = clia.substitute(formula, {k: clia.Const(v) for k, v in out.witness.items()})
        with SmtSession(solver) as s:
            r = s.check_sat(point, symbols=(z,))
        return True if r.is_unsat else (False if r.is_sat else None)
    if kind == "reachable":
        ip = ev[2] if len(ev) > 2 else None
        if ip is None:
            return None
        if clia.eval_cond(ip.post, out.witness):
            return False
        return at.reachable_from_pre(ip, out.witness)
    return None


def _dump(opts: SolveOptions, text: str) -> None:
    stream = opts.dump_stream or sys.stderr
    print(text, file=stream)


def solve(p, opts: SolveOptions | None = None) -> Outcome:
    opts = opts or SolveOptions()
    if opts.engine not in ENGINES:
        raise ValueError(f"unknown engine {opts.engine}")
    t0 = time.monotonic()
    deadline = t0 + opts.timeout if opts.timeout else None
    session = SmtSession(opts.solver, check_models=opts.check_models)
    stats: dict = {}
    cls = None
    try:
        cls = classify(p, session)
        out = _run(p, cls, opts, session, deadline, stats)
    except Timeout as exc:
        out = Outcome(TIMEOUT, opts.engine, message=str(exc))
    except (EngineInconclusive, HeightBudgetExhausted, Cancelled) as exc:
        out = Outcome(INCONCLUSIVE, opts.engine, message=str(exc))
    except ConcSynthError as exc:
        out = Outcome(ERROR, opts.engine, message=f"{type(exc).__name__}: {exc}")
    finally:
        stats["smt"] = dict(session.stats)
        stats["solve_seconds"] = time.monotonic() - t0
        session.close()
    if cls is not None:
        out.category = category(p, cls)
        out.fragment = cls.tag.value
    if out.status == SOLVED:
        try:
            ok = verify_solution(p, out.solution, opts.solver)
        except ConcSynthError as exc:
            ok = None
            out.message = f"verification failed to run: {exc}"
        if ok is True:
            out.verified = True
        elif ok is False:
            out.status = UNSOUND
            out.message = "emitted solution fails independent verification"
        else:
            out.status = INCONCLUSIVE
            out.message = out.message or "verification returned unknown"
    elif out.status == NO_SOLUTION:
        try:
            out.verified = bool(audit_no_solution(p, out, opts.solver))
        except ConcSynthError as exc:
            log.warning("could not audit nonexistence claim: %s", exc)
    stats["seconds"] = time.monotonic() - t0
    out.stats = stats
    return out


def _run(p, cls: ProblemClass, opts: SolveOptions, session: SmtSession, deadline, stats) -> Outcome:
    engine = opts.engine
    if engine == "auto":
        engine = "concolic"
        if opts.fragments:
            if cls.is_ssi:
                engine = "ssi"
            elif cls.tag is Fragment.AT:
                engine = "at"
    if engine == "ssi":
        if not cls.is_ssi:
            raise UnsupportedProblem(f"problem is not single-invocation ({cls.reason})")
        try:
            return _run_ssi(p, cls, session, deadline, opts)
        except NonUnitCoefficient as exc:
            if opts.engine == "ssi":
                raise UnsupportedProblem(str(exc)) from exc
            log.warning("%s; using the concolic engine", exc)
            stats["fallback"] = str(exc)
            engine = "concolic"
    elif engine == "at":
        if cls.tag is not Fragment.AT:
            raise UnsupportedProblem(f"problem is not acyclic translational ({cls.reason})")
        if opts.dump_graph:
            _dump(opts, cls.graph.to_dot())
        try:
            return _run_at(p, cls, session, deadline, opts)
        except FallbackRequired as exc:
            log.warning("%s; using the concolic engine", exc)
            stats["fallback"] = str(exc)
            engine = "concolic"
    return _run_concolic(p, opts, session, deadline, stats)


def _run_ssi(p, cls, session, deadline, opts) -> Outcome:
    try:
        if cls.tag is Fragment.SSI_COMMUTATIVE:
            sol = ssi.ssi_commutative(p.spec, p.fname, p.params, session, deadline)
        else:
            if opts.dump_candidates:
                nf = ssi.ssi_normalize(p.spec, p.fname, p.params, p.is_bool)
                for t in nf.candidates:
                    _dump(opts, to_sexpr(t))
            sol = ssi.solve_single_invocation(p.spec, p.fname, p.params, session, p.is_bool, deadline)
    except NoSolution as exc:
        return Outcome(NO_SOLUTION, "ssi", witness=exc.witness, evidence=exc.evidence, message=str(exc))
    return Outcome(SOLVED, "ssi", solution=sol)


def _run_at(p, cls, session, deadline, opts) -> Outcome:
    try:
        r = at.at_solve(p, session, cls.inv, cls.graph, deadline)
    except NoSolution as exc:
        evidence = ("reachable", exc.evidence[1] if exc.evidence else None, cls.inv)
        return Outcome(NO_SOLUTION, "at", witness=exc.witness, evidence=evidence, message=str(exc))
    return Outcome(SOLVED, "at", solution=r.invariant)


def _run_concolic(p, opts, session, deadline, stats) -> Outcome:
    dump = None
    if opts.dump_candidates:

        def dump(h, i, body):
            _dump(opts, f"; height {h} iteration {i}: {to_sexpr(body)}")

    timeout = None
    if deadline is not None:
        timeout = max(deadline - time.monotonic(), 0.001)
    r = concolic.concolic_synth(
        p,
        jobs=opts.jobs,
        max_height=opts.max_height,
        iter_cap=opts.iter_cap,
        timeout=timeout,
        solver=opts.solver,
        session=session if opts.jobs == 1 else None,
        dump=dump,
    )
    stats["height"] = r.height
    stats["heights"] = [
        {"height": o.height, "status": o.status, "iterations": o.iterations, "seconds": round(o.seconds, 4)}
        for o in r.outcomes
    ]
    return Outcome(SOLVED, "concolic", solution=r.solution)

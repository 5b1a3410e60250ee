"""Height-enumerating CEGIS over decision trees.

For a fixed height ``h`` the unknown function is a full decision tree whose
node ``i`` carries integer unknowns ``c_i`` (one per parameter) and ``d_i``.
Applied to a concrete argument vector the tree is an ite-term over those
unknowns, so the spec instantiated at finitely many counterexamples is a
QF_LIA formula the SMT solver can solve for the unknowns.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field

from . import clia
from .clia import (
    Const,
    DecisionTree,
    Geq,
    Ite,
    LinExpr,
    TreeKind,
    Var,
    add,
    conj,
)
from .errors import (
    Cancelled,
    EngineInconclusive,
    HeightBudgetExhausted,
    Timeout,
    UnsupportedProblem,
)
from .smt import FunDef, SmtSession

log = logging.getLogger(__name__)

DEFAULT_MAX_HEIGHT = 12
DEFAULT_ITER_CAP = 10_000
# Synthesis queries first look for trees whose unknowns lie in [-B, B]; only the
# unbounded query may conclude that no tree of the height exists.
DEFAULT_COEF_BOUND = 1


@dataclass
class CexStore:
    """Counterexamples in insertion order, each with the candidate it refuted."""

    examples: list = field(default_factory=list)
    refuted: list = field(default_factory=list)
    _seen: set = field(default_factory=set)

    def add(self, e: dict, candidate=None) -> bool:
        key = tuple(sorted(e.items()))
        if key in self._seen:
            return False
        self._seen.add(key)
        self.examples.append(dict(e))
        self.refuted.append(candidate)
        return True

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)


@dataclass
class HeightOutcome:
    height: int
    status: str  # "solved" | "no-solution" | "capped" | "unknown" | "cancelled"
    iterations: int = 0
    seconds: float = 0.0


@dataclass
class ConcolicResult:
    solution: object
    tree: DecisionTree
    height: int
    outcomes: list
    examples: int


def unknown_names(i: int, dim: int) -> tuple[list[str], str]:
    return [f"_c{i}_{j}" for j in range(dim)], f"_d{i}"


def _node_expr(i: int, values) -> clia.Term:
    cs, d = unknown_names(i, len(values))
    parts = [Var(c) if v == 1 else clia.Mul(v, Var(c)) for v, c in zip(values, cs) if v != 0]
    return add(*parts, Var(d))


def encode_app(height: int, values, kind: TreeKind = TreeKind.INT):
    """The height-``height`` tree applied to the constant vector ``values``, over the node unknowns."""
    if height < 1:
        raise ValueError("height must be positive")
    first_leaf = 2 ** (height - 1) - 1

    def build(i: int):
        e = _node_expr(i, values)
        if i >= first_leaf:
            return Geq(e, Const(0)) if kind is TreeKind.BOOL else e
        return (Ite if kind is TreeKind.INT else clia.CondIte)(
            Geq(e, Const(0)), build(2 * i + 1), build(2 * i + 2)
        )

    return build(0)


def instantiate_at(spec, fname: str, e: dict, height: int, kind: TreeKind, tag: str = ""):
    """``spec`` at the point ``e`` with every call replaced by the encoded tree.

    For integer trees each distinct call gets an output symbol ``_o<tag>_<k>`` and a
    defining equation, so the tree is encoded once per call rather than per occurrence.
    Returns ``(condition, output symbols)``.
    """
    ground = clia.substitute(spec, {k: Const(v) for k, v in e.items()})
    outputs: dict[tuple, str] = {}
    defs = []

    def encode(args):
        values = []
        for a in args:
            if clia.applications(a, fname):
                raise UnsupportedProblem("nested calls of the synthesized function")
            values.append(clia.eval_term(a, {}))
        if kind is TreeKind.BOOL:
            return encode_app(height, values, kind)
        key = tuple(values)
        if key not in outputs:
            name = f"_o{tag}_{len(outputs)}"
            outputs[key] = name
            defs.append(clia.eq(Var(name), encode_app(height, values, kind)))
        return Var(outputs[key])

    body = clia.substitute_apps(ground, fname, encode)
    return conj(body, *defs), list(outputs.values())


def tree_from_model(model: dict, height: int, dim: int, kind: TreeKind) -> DecisionTree:
    nodes = []
    for i in range(2**height - 1):
        cs, d = unknown_names(i, dim)
        nodes.append(LinExpr(tuple(model.get(c, 0) for c in cs), model.get(d, 0)))
    return DecisionTree(height, tuple(nodes), kind)


class Verifier:
    """Checks candidates against the spec; shared logic for both CEGIS and final checks."""

    def __init__(self, spec, fname: str, params, vars_, is_bool: bool):
        self.spec = spec
        self.fname = fname
        self.params = tuple(params)
        self.vars = tuple(vars_)
        self.sort = "Bool" if is_bool else "Int"

    def check(self, session: SmtSession, body, deadline=None):
        """None when ``body`` satisfies the spec, else a counterexample over the spec variables."""
        v = session.check_valid(self.spec, defs={self.fname: FunDef(self.params, body, self.sort)}, deadline=deadline)
        if v.valid is None:
            if deadline is not None and time.monotonic() >= deadline:
                raise Timeout("verifier ran out of time")
            raise EngineInconclusive(f"verifier returned unknown ({v.reason})")
        if v.valid:
            return None
        return {x: v.witness.get(x, 0) for x in self.vars}

    def holds_at(self, body, e: dict) -> bool:
        def f(*args):
            return clia.evaluate(body, dict(zip(self.params, args)))

        return clia.eval_cond(self.spec, e, {self.fname: f})


class _Stop:
    """Cooperative stop signal shared by workers."""

    def __init__(self, deadline: float | None, event: threading.Event | None = None):
        self.deadline = deadline
        self.event = event or threading.Event()

    def check(self) -> None:
        if self.event.is_set():
            raise Cancelled("stopped")
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise Timeout("deadline reached")


def fixed_height_synth(
    problem,
    height: int,
    store: CexStore,
    session: SmtSession,
    iter_cap: int | None = DEFAULT_ITER_CAP,
    deadline: float | None = None,
    stop: _Stop | None = None,
    outcome: HeightOutcome | None = None,
    dump=None,
    coef_bound: int | None = DEFAULT_COEF_BOUND,
) -> DecisionTree | None:
    """CEGIS at one height: a verified tree, or None when no tree of this height fits ``store``."""
    kind = TreeKind.BOOL if problem.is_bool else TreeKind.INT
    dim = problem.arity
    verifier = Verifier(problem.spec, problem.fname, problem.params, problem.vars, problem.is_bool)
    stop = stop or _Stop(deadline)
    encoded = {}
    symbols = [n for i in range(2**height - 1) for n in (*unknown_names(i, dim)[0], unknown_names(i, dim)[1])]
    candidate = DecisionTree.zeros(height, dim, kind)
    iterations = 0
    while True:
        stop.check()
        if iter_cap is not None and iterations >= iter_cap:
            raise HeightBudgetExhausted(f"height {height}: {iter_cap} iterations without a verdict")
        iterations += 1
        if outcome is not None:
            outcome.iterations = iterations
        body = clia.tree_to_term(candidate, problem.params)
        if dump is not None:
            dump(height, iterations, body)
        e = verifier.check(session, body, deadline)
        if e is None:
            return candidate
        if verifier.holds_at(body, e):
            raise EngineInconclusive(f"counterexample {e} does not refute the candidate")
        store.add(e, body)
        stop.check()
        for ex in store:
            key = tuple(sorted(ex.items()))
            if key not in encoded:
                encoded[key] = instantiate_at(problem.spec, problem.fname, ex, height, kind, str(len(encoded)))[0]
        query = conj(*encoded.values())
        r = None
        if coef_bound is not None:
            box = conj(*(c for n in symbols for c in (Geq(Var(n), Const(-coef_bound)), clia.le(Var(n), Const(coef_bound)))))
            r = session.check_sat(conj(query, box), symbols=symbols, deadline=deadline)
            if not r.is_sat:
                r = None
        if r is None:
            r = session.check_sat(query, symbols=symbols, deadline=deadline)
            if r.is_sat and coef_bound is not None:
                coef_bound = max(2 * coef_bound, *(abs(r.model[n]) for n in symbols))
        if r.is_unsat:
            return None
        if r.is_unknown:
            if deadline is not None and time.monotonic() >= deadline:
                raise Timeout("synthesis query ran out of time")
            raise EngineInconclusive(f"synthesis query returned unknown ({r.reason})")
        candidate = tree_from_model(r.model, height, dim, kind)


class HeightScheduler:
    """Hands out increasing heights and keeps the lowest successful one."""

    def __init__(self, workers: int, max_height: int = DEFAULT_MAX_HEIGHT):
        self.workers = workers
        self.max_height = max_height
        self.next_height = 1
        self.in_flight: dict[int, SmtSession] = {}
        self.result: tuple[int, DecisionTree] | None = None
        self._lock = threading.Lock()

    def take(self, session: SmtSession) -> int | None:
        with self._lock:
            if self.result is not None or self.next_height > self.max_height:
                return None
            h = self.next_height
            self.next_height += 1
            self.in_flight[h] = session
            return h

    def finish(self, h: int) -> None:
        with self._lock:
            self.in_flight.pop(h, None)

    def succeed(self, h: int, tree: DecisionTree) -> None:
        """Record a solution; heights above it are cancelled, heights below keep running."""
        with self._lock:
            self.in_flight.pop(h, None)
            if self.result is not None and self.result[0] <= h:
                return
            self.result = (h, tree)
            doomed = [s for k, s in self.in_flight.items() if k > h]
        for s in doomed:
            s.interrupt()


def concolic_synth(
    problem,
    jobs: int = 1,
    max_height: int = DEFAULT_MAX_HEIGHT,
    iter_cap: int | None = DEFAULT_ITER_CAP,
    timeout: float | None = None,
    solver: str | None = None,
    session: SmtSession | None = None,
    stop_event: threading.Event | None = None,
    dump=None,
) -> ConcolicResult:
    """Search heights 1, 2, ... for a decision tree satisfying the spec."""
    if jobs < 1:
        raise ValueError("jobs must be positive")
    deadline = time.monotonic() + timeout if timeout else None
    if jobs == 1:
        stop = _Stop(deadline, stop_event)
        own = session is None
        s = session or SmtSession(solver)
        try:
            return _sequential(problem, s, max_height, iter_cap, stop, dump)
        finally:
            if own:
                s.close()
    return _parallel(problem, jobs, max_height, iter_cap, _Stop(deadline), stop_event, solver, dump)


def _sequential(problem, session, max_height, iter_cap, stop, dump) -> ConcolicResult:
    store = CexStore()
    outcomes = []
    for h in range(1, max_height + 1):
        out = HeightOutcome(h, "no-solution")
        t0 = time.monotonic()
        outcomes.append(out)
        try:
            tree = fixed_height_synth(problem, h, store, session, iter_cap, stop.deadline, stop, out, dump)
        except HeightBudgetExhausted as exc:
            log.warning("%s; moving to height %d", exc, h + 1)
            out.status = "capped"
            continue
        finally:
            out.seconds = time.monotonic() - t0
        if tree is not None:
            out.status = "solved"
            log.info("height %d solved after %d iterations", h, out.iterations)
            return ConcolicResult(clia.tree_to_term(tree, problem.params), tree, h, outcomes, len(store))
        log.info("height %d has no solution (%d counterexamples)", h, len(store))
    raise EngineInconclusive(f"no decision tree of height <= {max_height} found")


def _parallel(problem, jobs, max_height, iter_cap, stop, outer_event, solver, dump) -> ConcolicResult:
    sched = HeightScheduler(jobs, max_height)
    outcomes: list[HeightOutcome] = []
    errors: list[Exception] = []
    sessions: list[SmtSession] = []
    lock = threading.Lock()

    def worker():
        session = SmtSession(solver)
        with lock:
            sessions.append(session)
        store = CexStore()  # private to this worker
        try:
            while True:
                h = sched.take(session)
                if h is None:
                    return
                out = HeightOutcome(h, "no-solution")
                with lock:
                    outcomes.append(out)
                t0 = time.monotonic()
                try:
                    tree = fixed_height_synth(problem, h, store, session, iter_cap, stop.deadline, stop, out, dump)
                except HeightBudgetExhausted:
                    out.status = "capped"
                    sched.finish(h)
                    continue
                except Cancelled:
                    out.status = "cancelled"
                    sched.finish(h)
                    return
                except (EngineInconclusive, Timeout) as exc:
                    out.status = "unknown"
                    sched.finish(h)
                    with lock:
                        errors.append(exc)
                    if isinstance(exc, Timeout):
                        return
                    continue
                finally:
                    out.seconds = time.monotonic() - t0
                if tree is None:
                    sched.finish(h)
                else:
                    out.status = "solved"
                    sched.succeed(h, tree)
        except Exception as exc:  # surfaced to the caller below
            with lock:
                errors.append(exc)
        finally:
            session.close()

    threads = [threading.Thread(target=worker, name=f"height-worker-{i}", daemon=True) for i in range(jobs)]
    for t in threads:
        t.start()
    try:
        while any(t.is_alive() for t in threads):
            for t in threads:
                t.join(timeout=0.1)
            overdue = stop.deadline is not None and time.monotonic() >= stop.deadline + 1.0
            if overdue or (outer_event is not None and outer_event.is_set()):
                stop.event.set()
                with lock:
                    for s in sessions:
                        s.interrupt()
    finally:
        stop.event.set()
        with lock:
            for s in sessions:
                s.interrupt()
        for t in threads:
            t.join()
    outcomes.sort(key=lambda o: o.height)
    if sched.result is not None:
        h, tree = sched.result
        return ConcolicResult(clia.tree_to_term(tree, problem.params), tree, h, outcomes, 0)
    for exc in errors:
        if isinstance(exc, Timeout):
            raise exc
    for exc in errors:
        if not isinstance(exc, EngineInconclusive):
            raise exc
    if errors:
        raise errors[0]
    raise EngineInconclusive(f"no decision tree of height <= {max_height} found")


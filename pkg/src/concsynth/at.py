"""Invariant synthesis for loops whose updates are guarded translations.

The loop body is normalised into branches ``(psi, c)``: when ``psi(x)`` holds
the state moves to ``x + c``.  Repeating one branch ``k`` times keeps the
state inside ``psi`` at both ends and, since ``psi`` is a conjunction of
linear atoms, everywhere in between; so the closure under same-branch steps
is ``exists k >= 0. phi(x - k*c) and psi(x - k*c) and psi(x)``, which Cooper
elimination turns into a condition with modulo atoms.  Steps that leave a
branch follow the edges of the branch graph; when that graph is acyclic,
alternating closures and branch exits at most ``n`` times (``n`` the longest
path) yields the set of reachable states, i.e. the strongest invariant.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

from . import clia, cooper
from .clia import (
    FALSE,
    TRUE,
    Cond,
    Ite,
    Lin,
    Var,
    conj,
    disj,
    negate,
)
from .errors import (
    ConcSynthError,
    Cyclic,
    EngineInconclusive,
    FallbackRequired,
    NoSolution,
    NotTranslational,
    SizeLimitExceeded,
)
from .printer import to_sexpr
from .smt import FunDef, SmtSession

log = logging.getLogger(__name__)

DEFAULT_SIZE_CAP = 50_000
K = "_k"


@dataclass(frozen=True)
class Branch:
    guard: Cond  # conjunction of literals
    shift: tuple  # one Lin per state variable, over constant variables and a constant

    def is_constant_shift(self) -> bool:
        return all(s.is_const for s in self.shift)

    def is_identity(self) -> bool:
        return all(s.is_const and s.const == 0 for s in self.shift)


@dataclass
class InvProblem:
    state_vars: tuple
    pre: Cond
    post: Cond
    branches: list
    const_vars: tuple = ()


@dataclass
class TransitionGraph:
    branches: list
    edges: set = field(default_factory=set)
    diameter: int = 0
    order: list = field(default_factory=list)

    def to_dot(self, names=None) -> str:
        lines = ["digraph transitions {"]
        for i, b in enumerate(self.branches):
            shift = ", ".join(to_sexpr(s.to_term()) for s in b.shift)
            label = f"{to_sexpr(b.guard)} / +({shift})".replace('"', "'")
            lines.append(f'  b{i} [label="{label}"];')
        for a, b in sorted(self.edges):
            lines.append(f"  b{a} -> b{b};")
        lines.append("}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Normalisation
# ---------------------------------------------------------------------------


def _first_ite_cond(terms):
    for t in terms:
        for n in clia.iter_nodes(t):
            if isinstance(n, Ite):
                return n.cond
    return None


def _resolve(t, cond, value: bool):
    """Replace every ite over ``cond`` in ``t`` by the branch ``value`` selects."""

    def tf(x):
        if isinstance(x, Ite) and x.cond == cond:
            return x.then if value else x.other
        return x

    return clia.map_node(t, term_fn=tf)


def flatten_paths(terms) -> list[tuple[list, tuple]]:
    """Split an ite-laden update vector into ``(path condition literals, ite-free terms)``."""
    out = []
    stack = [([], tuple(terms))]
    while stack:
        path, ts = stack.pop()
        c = _first_ite_cond(ts)
        if c is None:
            out.append((path, ts))
            continue
        for value in (False, True):
            branch = [c if value else negate(c)]
            stack.append((path + branch, tuple(_resolve(t, c, value) for t in ts)))
    out.reverse()
    return out


def _disjoint_cubes(cubes: list[tuple]) -> list[tuple]:
    """Rewrite overlapping cubes into pairwise disjoint ones covering the same set."""
    done: list[tuple] = []
    for cube in cubes:
        pieces = [cube]
        for prev in done:
            nxt = []
            for p in pieces:
                acc = list(p)
                for lit in prev:
                    neg = clia.negate_atom(lit)
                    piece = tuple(dict.fromkeys(acc + [neg]))
                    if not clia._complementary(piece):
                        nxt.append(piece)
                    acc.append(lit)
            pieces = nxt
        done.extend(pieces)
    return done


def detect_translational(p, session: SmtSession | None = None, cap: int = 4096) -> InvProblem:
    """Branches of the loop update, or :class:`NotTranslational`."""
    if p.inv_parts is None:
        raise NotTranslational("not an invariant problem")
    parts = p.inv_parts
    if parts.trans is None:
        raise NotTranslational("transition relation is not a function of the current state")
    state = tuple(parts.state_vars)
    leaves = []
    for path, ts in flatten_paths(parts.trans):
        shifts = []
        for v, t in zip(state, ts):
            try:
                lin = clia.linearize(t)
            except ConcSynthError as exc:
                raise NotTranslational(f"update of {v} is not linear: {exc}") from exc
            shift = lin - Lin.var(v)
            if lin.coeff(v) != 1:
                raise NotTranslational(f"update of {v} does not keep {v} with coefficient 1")
            shifts.append(shift)
        leaves.append((conj(*path), tuple(shifts)))
    const_vars = tuple(
        v for i, v in enumerate(state) if all(s[i].is_const and s[i].const == 0 for _, s in leaves)
    )
    for _, shifts in leaves:
        for i, s in enumerate(shifts):
            if any(x not in const_vars for x in s.vars()):
                raise NotTranslational(f"update of {state[i]} depends on a changing variable")
    branches = []
    for guard, shifts in leaves:
        cubes = clia.dnf_cubes(guard, cap)
        for cube in _disjoint_cubes(cubes):
            g = conj(*cube)
            if session is not None and not _satisfiable(session, g):
                continue
            branches.append(Branch(g, shifts))
    if len(branches) > cap:
        raise SizeLimitExceeded(f"{len(branches)} branches")
    ip = InvProblem(state, parts.pre, parts.post, branches, const_vars)
    for b in branches:
        if not b.is_constant_shift() and local_guard_possible(ip, b, session):
            raise NotTranslational("a repeating branch shifts by a symbolic amount")
    return ip


def _satisfiable(session: SmtSession, c: Cond) -> bool:
    r = session.check_sat(c)
    return not r.is_unsat


# ---------------------------------------------------------------------------
# Images
# ---------------------------------------------------------------------------


def shifted(c: Cond, state, shift, k=1, var: str | None = None) -> Cond:
    """``c(x - k*shift)``; with ``var`` the multiplier is the variable ``var`` instead of ``k``."""
    mapping = {}
    for v, s in zip(state, shift):
        if s.is_const and s.const == 0:
            continue
        if var is None:
            mapping[v] = (Lin.var(v) - s.scale(k)).to_term()
        else:
            if not s.is_const:
                raise NotTranslational("symbolic shift under repetition")
            mapping[v] = (Lin.var(v) - Lin.var(var, s.const)).to_term()
    return clia.simplify(clia.substitute(c, mapping))


def forward(c: Cond, state, shift) -> Cond:
    """``c(x + shift)``."""
    return shifted(c, state, shift, k=-1)


def split_local_cross(b: Branch, state) -> tuple[Cond, Cond]:
    after = forward(b.guard, state, b.shift)
    return clia.simplify(conj(b.guard, after)), clia.simplify(conj(b.guard, negate(after)))


def local_guard_possible(ip: InvProblem, b: Branch, session: SmtSession | None) -> bool:
    local, _ = split_local_cross(b, ip.state_vars)
    if local == FALSE:
        return False
    if session is None:
        return True
    return _satisfiable(session, local)


def post_image(phi: Cond, branches, state) -> Cond:
    """States reachable in one step from ``phi``."""
    return disj(*(conj(shifted(phi, state, b.shift), shifted(b.guard, state, b.shift)) for b in branches))


def cross_step(phi: Cond, branches, state) -> Cond:
    """States reachable from ``phi`` by one step that leaves its branch."""
    parts = []
    for b in branches:
        if b.is_identity():
            continue
        before = conj(shifted(phi, state, b.shift), shifted(b.guard, state, b.shift))
        parts.append(conj(before, negate(b.guard)))
    return clia.simplify(disj(*parts))


def fast_trans(phi: Cond, branches, state, session: SmtSession | None = None, cap: int = DEFAULT_SIZE_CAP) -> Cond:
    """States reachable from ``phi`` by any number of steps that stay in one branch."""
    if phi == FALSE:
        return FALSE
    parts = [phi]
    for b in branches:
        if b.is_identity():
            continue
        if not b.is_constant_shift():
            continue  # its local guard is unsatisfiable, so phi itself already covers it
        body = conj(shifted(phi, state, b.shift, var=K), shifted(b.guard, state, b.shift, var=K), b.guard)
        if session is not None and not _satisfiable(session, body):
            continue
        parts.append(cooper.eliminate(K, body, lower_bound_zero=True))
    out = clia.simplify(disj(*parts))
    if clia.size(out) > cap:
        raise SizeLimitExceeded(f"closure formula has {clia.size(out)} nodes")
    return out


# ---------------------------------------------------------------------------
# Graph and invariant
# ---------------------------------------------------------------------------


def build_graph(branches, state, session: SmtSession) -> TransitionGraph:
    edges = set()
    for i, b in enumerate(branches):
        if b.is_identity():
            continue
        for j, b2 in enumerate(branches):
            if i == j:
                continue
            q = conj(b.guard, forward(b2.guard, state, b.shift))
            if q == FALSE:
                continue
            r = session.check_sat(q)
            if not r.is_unsat:  # unknown counts as an edge
                edges.add((i, j))
    order = _topological(len(branches), edges)
    if order is None:
        raise Cyclic("branch graph has a cycle")
    longest = [0] * len(branches)
    for v in reversed(order):
        longest[v] = max((longest[w] + 1 for (u, w) in edges if u == v), default=0)
    return TransitionGraph(list(branches), edges, max(longest, default=0), order)


def _topological(n: int, edges) -> list | None:
    indeg = [0] * n
    for _, w in edges:
        indeg[w] += 1
    queue = deque(i for i in range(n) if indeg[i] == 0)
    order = []
    while queue:
        v = queue.popleft()
        order.append(v)
        for u, w in edges:
            if u == v:
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(w)
    return order if len(order) == n else None


def strongest_invariant(ip: InvProblem, g: TransitionGraph, session: SmtSession | None = None, cap: int = DEFAULT_SIZE_CAP) -> Cond:
    state = ip.state_vars
    layer = fast_trans(clia.simplify(ip.pre), ip.branches, state, session, cap)
    layers = [layer]
    for _ in range(g.diameter):
        step = cross_step(layer, ip.branches, state)
        if step == FALSE or (session is not None and not _satisfiable(session, step)):
            break
        layer = fast_trans(step, ip.branches, state, session, cap)
        layers.append(layer)
    return clia.simplify(disj(*layers))


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


@dataclass
class AtResult:
    invariant: Cond  # over the synthesized function's parameters
    strong: Cond
    graph: TransitionGraph


def _to_params(c: Cond, state, params) -> Cond:
    return clia.substitute(c, {v: Var(q) for v, q in zip(state, params)})


def _valid(session: SmtSession, c: Cond, defs=None, deadline=None):
    v = session.check_valid(c, defs=defs, deadline=deadline)
    if v.valid is None:
        raise EngineInconclusive(f"validity check returned unknown ({v.reason})")
    return v


def small_witness(session: SmtSession, c: Cond, state, deadline=None) -> dict | None:
    """A model of ``c`` inside the smallest box ``|x| <= B`` tried, else any model."""
    for bound in (4, 16, 64, 256, 1024):
        box = conj(*(conj(clia.Geq(Var(v), clia.Const(-bound)), clia.le(Var(v), clia.Const(bound))) for v in state))
        r = session.check_sat(conj(c, box), symbols=state, deadline=deadline)
        if r.is_sat:
            return {v: r.model[v] for v in state}
    r = session.check_sat(c, symbols=state, deadline=deadline)
    if r.is_sat:
        return {v: r.model[v] for v in state}
    return None


def at_solve(p, session: SmtSession, ip: InvProblem | None = None, graph: TransitionGraph | None = None, deadline=None) -> AtResult:
    """A CLIA invariant, :class:`NoSolution` when none exists, or :class:`FallbackRequired`."""
    ip = ip or detect_translational(p, session)
    graph = graph or build_graph(ip.branches, ip.state_vars, session)
    strong = strongest_invariant(ip, graph, session)
    state = ip.state_vars
    v = _valid(session, clia.implies(strong, ip.post), deadline=deadline)
    if not v.valid:
        bad = conj(strong, negate(ip.post))
        witness = small_witness(session, bad, state, deadline) or {x: v.witness.get(x, 0) for x in state}
        raise NoSolution(
            f"a reachable state violates the postcondition: {witness}",
            witness=witness,
            evidence=("reachable", strong),
        )
    weak = clia.simplify(cooper.strip_modulo(strong))
    inv = _to_params(weak, state, p.params)
    defs = {p.fname: FunDef(tuple(p.params), inv, "Bool")}
    check = _valid(session, p.check_spec, defs=defs, deadline=deadline)
    if not check.valid:
        raise FallbackRequired("invariant without modulo constraints is not inductive or too weak", partial=strong)
    return AtResult(inv, strong, graph)


def predecessors(ip: InvProblem, y: dict) -> list[dict]:
    out = []
    for b in ip.branches:
        x = {}
        for v, s in zip(ip.state_vars, b.shift):
            x[v] = y[v] - s.evaluate(y)
        if clia.eval_cond(b.guard, x):
            out.append(x)
    return out


def reachable_from_pre(ip: InvProblem, target: dict, limit: int = 20_000) -> bool | None:
    """Backward search from ``target`` to a state satisfying pre; None when the limit is hit."""
    start = tuple(target[v] for v in ip.state_vars)
    seen = {start}
    queue = deque([dict(target)])
    while queue:
        y = queue.popleft()
        if clia.eval_cond(ip.pre, y):
            return True
        for x in predecessors(ip, y):
            key = tuple(x[v] for v in ip.state_vars)
            if key not in seen:
                if len(seen) >= limit:
                    return None
                seen.add(key)
                queue.append(x)
    return False


def step(ip: InvProblem, x: dict) -> dict:
    """The successor of ``x`` (identity when no branch applies)."""
    for b in ip.branches:
        if clia.eval_cond(b.guard, x):
            return {v: x[v] + s.evaluate(x) for v, s in zip(ip.state_vars, b.shift)}
    return dict(x)

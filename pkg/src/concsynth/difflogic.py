"""Propositional refutation with difference-logic lemmas.

CDCL(T) solvers can be very slow on ordering-heavy formulas such as "no
element of x1..xn is the maximum", even though the purely propositional
version with transitivity clauses is easy.  :func:`refute` replaces every
atom ``u - v >= k`` (bounds ``x >= k`` use a zero variable) by a Boolean,
adds valid transitivity and monotonicity clauses over those atoms, and asks
the solver about the abstraction.  Unsat there means unsat in integer
arithmetic; anything else proves nothing and the caller asks the real query.
"""

from __future__ import annotations

import bisect
import logging
from collections import defaultdict

from . import clia
from .clia import And, BoolConst, CondIte, Geq, Not, Or

log = logging.getLogger(__name__)

ZERO_VAR = ""
DEFAULT_LEMMA_CAP = 200_000
# Formulas beyond this many nodes are not abstracted; atomizing them costs more than it saves.
DEFAULT_NODE_CAP = 300_000


class Abstraction:
    """Boolean skeleton of a formula plus the difference atoms it mentions."""

    def __init__(self) -> None:
        self.names: dict = {}  # atom key -> Boolean name
        self.thresholds: dict = defaultdict(set)  # (u, v) -> {k}: atoms u - v >= k
        self.opaque = 0

    def var(self, key) -> str:
        name = self.names.get(key)
        if name is None:
            name = self.names[key] = f"b{len(self.names)}"
        return name

    def atom(self, c: Geq) -> str:
        split = difference_literal(clia.atom_lin(c))
        if split is None:
            self.opaque += 1
            return self.var(("opaque", c))
        u, v, k, positive = split
        self.thresholds[(u, v)].add(k)
        lit = self.var((u, v, k))
        return lit if positive else f"(not {lit})"

    def encode(self, c) -> str:
        if isinstance(c, BoolConst):
            return "true" if c.value else "false"
        if isinstance(c, Geq):
            return self.atom(c)
        if isinstance(c, Not):
            return f"(not {self.encode(c.arg)})"
        if isinstance(c, And):
            return "(and " + " ".join(self.encode(a) for a in c.args) + ")"
        if isinstance(c, Or):
            return "(or " + " ".join(self.encode(a) for a in c.args) + ")"
        if isinstance(c, CondIte):
            return f"(ite {self.encode(c.cond)} {self.encode(c.then)} {self.encode(c.other)})"
        # modulo atoms and anything else stay uninterpreted
        self.opaque += 1
        return self.var(("opaque", c))


def difference_literal(lin: clia.Lin):
    """``(u, v, k, positive)`` with ``u < v`` when ``lin >= 0`` is ``[not] u - v >= k``."""
    coeffs = lin.as_dict()
    if len(coeffs) == 1:
        (x, a), = coeffs.items()
        if abs(a) != 1:
            return None
        coeffs[ZERO_VAR] = -a
    if len(coeffs) != 2:
        return None
    (u, a), (v, b) = sorted(coeffs.items())
    if {a, b} != {1, -1}:
        return None
    c = lin.const
    if a == 1:
        return u, v, -c, True  # u - v + c >= 0
    return u, v, c + 1, False  # v - u + c >= 0, i.e. not (u - v >= c + 1)


def _edges(ab: Abstraction):
    """Each literal as a directed fact ``a - b >= w``: ``(a, b, w, literal)``."""
    for (u, v), ks in ab.thresholds.items():
        for k in ks:
            name = ab.names[(u, v, k)]
            yield u, v, k, name
            yield v, u, 1 - k, f"(not {name})"


def lemmas(ab: Abstraction, cap: int = DEFAULT_LEMMA_CAP) -> list[str] | None:
    """Valid clauses linking the atoms; None when there would be more than ``cap``."""
    out: list[str] = []
    for (u, v), ks in ab.thresholds.items():
        ordered = sorted(ks)
        for lo, hi in zip(ordered, ordered[1:]):
            out.append(f"(or (not {ab.names[(u, v, hi)]}) {ab.names[(u, v, lo)]})")
    sorted_ks = {pair: sorted(ks) for pair, ks in ab.thresholds.items()}
    incoming = defaultdict(list)
    outgoing = defaultdict(list)
    for a, b, w, lit in _edges(ab):
        outgoing[a].append((b, w, lit))
        incoming[b].append((a, w, lit))
    for mid in incoming:
        for a, w1, l1 in incoming[mid]:
            for c, w2, l2 in outgoing[mid]:
                w = w1 + w2  # a - c >= w
                if a == c:
                    if w > 0:
                        out.append(f"(or (not {l1}) (not {l2}))")
                    continue
                implied = _strongest(ab, sorted_ks, a, c, w)
                if implied is not None:
                    out.append(f"(or (not {l1}) (not {l2}) {implied})")
                if len(out) > cap:
                    return None
    return out


def _strongest(ab: Abstraction, sorted_ks, a: str, c: str, w: int) -> str | None:
    """Strongest existing literal implied by ``a - c >= w``."""
    if a < c:
        ks = sorted_ks.get((a, c))
        if not ks:
            return None
        i = bisect.bisect_right(ks, w)
        return ab.names[(a, c, ks[i - 1])] if i else None
    # a - c >= w  is  not (c - a >= 1 - w); smallest threshold >= 1 - w is the strongest
    ks = sorted_ks.get((c, a))
    if not ks:
        return None
    i = bisect.bisect_left(ks, 1 - w)
    return f"(not {ab.names[(c, a, ks[i])]})" if i < len(ks) else None


def abstract(c, cap: int = DEFAULT_LEMMA_CAP) -> tuple[list[str], Abstraction] | None:
    """SMT-LIB commands (declarations and assertions) for the abstraction of ``c``."""
    ab = Abstraction()
    # one assertion per top-level conjunct of the NNF; z3's SAT core does much better with that
    nnf = clia.to_nnf(clia.atomize(c))
    parts = nnf.args if isinstance(nnf, And) else (nnf,)
    bodies = [ab.encode(p) for p in parts]
    extra = lemmas(ab, cap)
    if extra is None:
        return None
    lines = [f"(declare-const {name} Bool)" for name in ab.names.values()]
    lines += [f"(assert {b})" for b in bodies]
    lines += [f"(assert {cl})" for cl in extra]
    return lines, ab


def _too_big(c, cap: int) -> bool:
    for i, _ in enumerate(clia.iter_nodes(c)):
        if i >= cap:
            return True
    return False


def refute(
    session, c, deadline: float | None = None, cap: int = DEFAULT_LEMMA_CAP, node_cap: int = DEFAULT_NODE_CAP
) -> bool:
    """True when ``c`` is shown unsatisfiable through its Boolean abstraction."""
    if _too_big(c, node_cap) or not clia.is_ground(c):
        return False
    built = abstract(c, cap)
    if built is None:
        log.debug("difference abstraction skipped: more than %d lemmas", cap)
        return False
    lines, ab = built
    if not ab.thresholds:
        return False
    r = session.check_commands(lines, deadline=deadline)
    log.debug("difference abstraction with %d atoms: %s", len(ab.names), r.status)
    return r.is_unsat

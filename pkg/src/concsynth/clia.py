"""Terms and conditions of conditional linear integer arithmetic.

Terms::

    t ::= n | x | t + t | k * t | ite(c, t, t) | f(t, ..., t)

Conditions::

    c ::= t >= t | c /\\ c | c \\/ c | ~c | ite(c, c, c) | f(t, ..., t) | true | false
        | (t mod m) = r

``And``/``Or`` are n-ary.  ``ModEq`` only shows up in conditions produced by
quantifier elimination; it is not part of the input language.

All nodes are frozen dataclasses, so they hash, compare structurally, and
can be shared between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Callable, Iterable, Mapping, Sequence, Union

from .errors import NonLinear, SizeLimitExceeded, UngroundedTerm

DEFAULT_CLAUSE_CAP = 4096


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Const:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True, slots=True)
class Mul:
    coef: int
    arg: "Term"


@dataclass(frozen=True, slots=True)
class Ite:
    cond: "Cond"
    then: "Term"
    other: "Term"


@dataclass(frozen=True, slots=True)
class App:
    fname: str
    args: tuple


@dataclass(frozen=True, slots=True)
class Geq:
    left: "Term"
    right: "Term"


@dataclass(frozen=True, slots=True)
class And:
    args: tuple


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple


@dataclass(frozen=True, slots=True)
class Not:
    arg: "Cond"


@dataclass(frozen=True, slots=True)
class CondIte:
    cond: "Cond"
    then: "Cond"
    other: "Cond"


@dataclass(frozen=True, slots=True)
class AppB:
    fname: str
    args: tuple


@dataclass(frozen=True, slots=True)
class BoolConst:
    value: bool


@dataclass(frozen=True, slots=True)
class ModEq:
    """``term mod modulus == residue`` with ``modulus >= 2`` and ``0 <= residue < modulus``."""

    term: "Term"
    modulus: int
    residue: int


Term = Union[Const, Var, Add, Mul, Ite, App]
Cond = Union[Geq, And, Or, Not, CondIte, AppB, BoolConst, ModEq]

TRUE = BoolConst(True)
FALSE = BoolConst(False)
ZERO = Const(0)
ONE = Const(1)

TERM_TYPES = (Const, Var, Add, Mul, Ite, App)
COND_TYPES = (Geq, And, Or, Not, CondIte, AppB, BoolConst, ModEq)


def is_term(x) -> bool:
    return isinstance(x, TERM_TYPES)


# ---------------------------------------------------------------------------
# Convenience constructors
# ---------------------------------------------------------------------------


def add(*terms: Term) -> Term:
    if not terms:
        return ZERO
    return reduce(Add, terms)


def neg(t: Term) -> Term:
    return Mul(-1, t)


def sub(a: Term, b: Term) -> Term:
    return Add(a, Mul(-1, b))


def le(a: Term, b: Term) -> Cond:
    return Geq(b, a)


def gt(a: Term, b: Term) -> Cond:
    return Geq(a, Add(b, ONE))


def lt(a: Term, b: Term) -> Cond:
    return Geq(b, Add(a, ONE))


def eq(a: Term, b: Term) -> Cond:
    """Equality has no node of its own: ``a = b`` is ``a >= b /\\ b >= a``."""
    return And((Geq(a, b), Geq(b, a)))


def conj(*cs: Cond) -> Cond:
    """Flattening conjunction with unit/zero absorption and duplicate removal."""
    out: list = []
    seen: set = set()
    for c in cs:
        parts = c.args if isinstance(c, And) else (c,)
        for p in parts:
            if p == TRUE:
                continue
            if p == FALSE:
                return FALSE
            if p not in seen:
                seen.add(p)
                out.append(p)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*cs: Cond) -> Cond:
    out: list = []
    seen: set = set()
    for c in cs:
        parts = c.args if isinstance(c, Or) else (c,)
        for p in parts:
            if p == FALSE:
                continue
            if p == TRUE:
                return TRUE
            if p not in seen:
                seen.add(p)
                out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def negate(c: Cond) -> Cond:
    if isinstance(c, BoolConst):
        return BoolConst(not c.value)
    if isinstance(c, Not):
        return c.arg
    return Not(c)


def implies(a: Cond, b: Cond) -> Cond:
    return disj(negate(a), b)


def iff(a: Cond, b: Cond) -> Cond:
    return disj(conj(a, b), conj(negate(a), negate(b)))


# ---------------------------------------------------------------------------
# Traversal helpers
# ---------------------------------------------------------------------------


def map_node(node, term_fn: Callable | None = None, cond_fn: Callable | None = None):
    """Bottom-up rebuild. ``term_fn``/``cond_fn`` see nodes whose children are already rebuilt."""

    def go(n):
        if isinstance(n, (Const, Var)):
            r = n
        elif isinstance(n, Add):
            r = Add(go(n.left), go(n.right))
        elif isinstance(n, Mul):
            r = Mul(n.coef, go(n.arg))
        elif isinstance(n, Ite):
            r = Ite(go(n.cond), go(n.then), go(n.other))
        elif isinstance(n, App):
            r = App(n.fname, tuple(go(a) for a in n.args))
        elif isinstance(n, Geq):
            r = Geq(go(n.left), go(n.right))
        elif isinstance(n, And):
            r = And(tuple(go(a) for a in n.args))
        elif isinstance(n, Or):
            r = Or(tuple(go(a) for a in n.args))
        elif isinstance(n, Not):
            r = Not(go(n.arg))
        elif isinstance(n, CondIte):
            r = CondIte(go(n.cond), go(n.then), go(n.other))
        elif isinstance(n, AppB):
            r = AppB(n.fname, tuple(go(a) for a in n.args))
        elif isinstance(n, BoolConst):
            r = n
        elif isinstance(n, ModEq):
            r = ModEq(go(n.term), n.modulus, n.residue)
        else:
            raise TypeError(f"not a CLIA node: {n!r}")
        if is_term(r):
            return term_fn(r) if term_fn else r
        return cond_fn(r) if cond_fn else r

    return go(node)


def children(n) -> tuple:
    if isinstance(n, (Const, Var, BoolConst)):
        return ()
    if isinstance(n, Add):
        return (n.left, n.right)
    if isinstance(n, Mul):
        return (n.arg,)
    if isinstance(n, (Ite, CondIte)):
        return (n.cond, n.then, n.other)
    if isinstance(n, (App, AppB, And, Or)):
        return n.args
    if isinstance(n, Geq):
        return (n.left, n.right)
    if isinstance(n, Not):
        return (n.arg,)
    if isinstance(n, ModEq):
        return (n.term,)
    raise TypeError(f"not a CLIA node: {n!r}")


def iter_nodes(n):
    stack = [n]
    while stack:
        x = stack.pop()
        yield x
        stack.extend(children(x))


def free_vars(n) -> set[str]:
    return {x.name for x in iter_nodes(n) if isinstance(x, Var)}


def applications(n, fname: str | None = None) -> list:
    """All ``App``/``AppB`` nodes (optionally only those of ``fname``), in DFS order."""
    return [
        x
        for x in iter_nodes(n)
        if isinstance(x, (App, AppB)) and (fname is None or x.fname == fname)
    ]


def is_ground(n) -> bool:
    return not any(isinstance(x, (App, AppB)) for x in iter_nodes(n))


def size(n) -> int:
    return sum(1 for _ in iter_nodes(n))


def substitute(n, mapping: Mapping[str, Term]):
    """Replace variables by terms."""
    if not mapping:
        return n
    return map_node(n, term_fn=lambda t: mapping.get(t.name, t) if isinstance(t, Var) else t)


def substitute_apps(n, fname: str, fn: Callable[[tuple], object]):
    """Replace every application of ``fname`` by ``fn(args)`` (innermost first)."""

    def tf(t):
        if isinstance(t, App) and t.fname == fname:
            return fn(t.args)
        return t

    def cf(c):
        if isinstance(c, AppB) and c.fname == fname:
            return fn(c.args)
        return c

    return map_node(n, term_fn=tf, cond_fn=cf)


def instantiate(n, fname: str, params: Sequence[str], body):
    """Replace ``fname`` by ``lambda params. body``."""
    return substitute_apps(n, fname, lambda args: substitute(body, dict(zip(params, args))))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def eval_term(t: Term, env: Mapping[str, int], funcs: Mapping[str, Callable] | None = None) -> int:
    """Evaluate a term.  Applications need an entry in ``funcs``; otherwise
    :class:`UngroundedTerm` is raised."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Add):
        return eval_term(t.left, env, funcs) + eval_term(t.right, env, funcs)
    if isinstance(t, Mul):
        return t.coef * eval_term(t.arg, env, funcs)
    if isinstance(t, Ite):
        if eval_cond(t.cond, env, funcs):
            return eval_term(t.then, env, funcs)
        return eval_term(t.other, env, funcs)
    if isinstance(t, App):
        if funcs is None or t.fname not in funcs:
            raise UngroundedTerm(f"application of {t.fname} has no interpretation")
        return funcs[t.fname](*(eval_term(a, env, funcs) for a in t.args))
    raise TypeError(f"not a term: {t!r}")


def eval_cond(c: Cond, env: Mapping[str, int], funcs: Mapping[str, Callable] | None = None) -> bool:
    if isinstance(c, Geq):
        return eval_term(c.left, env, funcs) >= eval_term(c.right, env, funcs)
    if isinstance(c, And):
        return all(eval_cond(a, env, funcs) for a in c.args)
    if isinstance(c, Or):
        return any(eval_cond(a, env, funcs) for a in c.args)
    if isinstance(c, Not):
        return not eval_cond(c.arg, env, funcs)
    if isinstance(c, CondIte):
        if eval_cond(c.cond, env, funcs):
            return eval_cond(c.then, env, funcs)
        return eval_cond(c.other, env, funcs)
    if isinstance(c, BoolConst):
        return c.value
    if isinstance(c, ModEq):
        return eval_term(c.term, env, funcs) % c.modulus == c.residue
    if isinstance(c, AppB):
        if funcs is None or c.fname not in funcs:
            raise UngroundedTerm(f"application of {c.fname} has no interpretation")
        return bool(funcs[c.fname](*(eval_term(a, env, funcs) for a in c.args)))
    raise TypeError(f"not a condition: {c!r}")


def evaluate(n, env, funcs=None):
    return eval_term(n, env, funcs) if is_term(n) else eval_cond(n, env, funcs)


# ---------------------------------------------------------------------------
# Linear forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Lin:
    """Sparse linear form ``sum(c * x) + const`` keyed by variable name."""

    coeffs: tuple = ()
    const: int = 0

    @staticmethod
    def of(d: Mapping[str, int], const: int = 0) -> "Lin":
        return Lin(tuple(sorted((k, v) for k, v in d.items() if v != 0)), const)

    @staticmethod
    def var(name: str, k: int = 1) -> "Lin":
        return Lin(((name, k),) if k else (), 0)

    @staticmethod
    def constant(c: int) -> "Lin":
        return Lin((), c)

    def as_dict(self) -> dict[str, int]:
        return dict(self.coeffs)

    def coeff(self, name: str) -> int:
        for k, v in self.coeffs:
            if k == name:
                return v
        return 0

    def vars(self) -> list[str]:
        return [k for k, _ in self.coeffs]

    @property
    def is_const(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "Lin") -> "Lin":
        d = self.as_dict()
        for k, v in other.coeffs:
            d[k] = d.get(k, 0) + v
        return Lin.of(d, self.const + other.const)

    def __neg__(self) -> "Lin":
        return Lin(tuple((k, -v) for k, v in self.coeffs), -self.const)

    def __sub__(self, other: "Lin") -> "Lin":
        return self + (-other)

    def scale(self, k: int) -> "Lin":
        if k == 0:
            return Lin()
        return Lin(tuple((n, v * k) for n, v in self.coeffs), self.const * k)

    def shift(self, c: int) -> "Lin":
        return Lin(self.coeffs, self.const + c)

    def drop(self, name: str) -> "Lin":
        return Lin(tuple((k, v) for k, v in self.coeffs if k != name), self.const)

    def subst(self, name: str, repl: "Lin") -> "Lin":
        a = self.coeff(name)
        if a == 0:
            return self
        return self.drop(name) + repl.scale(a)

    def subst_many(self, mapping: Mapping[str, "Lin"]) -> "Lin":
        out = Lin((), self.const)
        for k, v in self.coeffs:
            out = out + (mapping[k].scale(v) if k in mapping else Lin(((k, v),)))
        return out

    def evaluate(self, env: Mapping[str, int]) -> int:
        return sum(v * env[k] for k, v in self.coeffs) + self.const

    def content(self) -> int:
        """gcd of the variable coefficients (0 for a constant)."""
        return reduce(math.gcd, (abs(v) for _, v in self.coeffs), 0)

    def to_term(self) -> Term:
        parts: list[Term] = []
        for name, k in self.coeffs:
            parts.append(Var(name) if k == 1 else Mul(k, Var(name)))
        if self.const or not parts:
            parts.append(Const(self.const))
        return add(*parts)


def linearize(t: Term) -> Lin:
    """Linear form of an ite-free, application-free term."""
    if isinstance(t, Const):
        return Lin((), t.value)
    if isinstance(t, Var):
        return Lin(((t.name, 1),), 0)
    if isinstance(t, Add):
        return linearize(t.left) + linearize(t.right)
    if isinstance(t, Mul):
        return linearize(t.arg).scale(t.coef)
    if isinstance(t, Ite):
        raise NonLinear("ite inside a linear term; lift it first")
    if isinstance(t, App):
        raise UngroundedTerm(f"application of {t.fname} inside a linear term")
    raise TypeError(f"not a term: {t!r}")


def ge0(lin: Lin) -> Cond:
    """Canonical atom ``lin >= 0``: coefficients divided by their gcd, constants folded."""
    if lin.is_const:
        return BoolConst(lin.const >= 0)
    g = lin.content()
    if g > 1:
        lin = Lin(tuple((k, v // g) for k, v in lin.coeffs), lin.const // g)
    return Geq(lin.to_term(), ZERO)


def mod_eq(lin: Lin, m: int, r: int) -> Cond:
    """Canonical atom ``lin mod m == r``."""
    if m <= 0:
        raise ValueError("modulus must be positive")
    r = (r - lin.const) % m
    coeffs = tuple((k, v % m) for k, v in lin.coeffs if v % m)
    g = reduce(math.gcd, (v for _, v in coeffs), m)
    if r % g:
        return FALSE
    m //= g
    r //= g
    coeffs = tuple((k, v // g) for k, v in coeffs)
    if m == 1:
        return TRUE
    if not coeffs:
        return BoolConst(r == 0)
    return ModEq(Lin(coeffs, 0).to_term(), m, r)


def atom_lin(c: Geq) -> Lin:
    return linearize(c.left) - linearize(c.right)


def negate_atom(c: Cond) -> Cond:
    """Negation of a canonical literal, staying inside the ``>=`` fragment where possible."""
    if isinstance(c, Geq):
        return ge0(-atom_lin(c) - Lin.constant(1))
    if isinstance(c, BoolConst):
        return BoolConst(not c.value)
    if isinstance(c, Not):
        return c.arg
    return Not(c)


# ---------------------------------------------------------------------------
# Ite lifting and normal forms
# ---------------------------------------------------------------------------


def _find_ite(t: Term) -> Ite | None:
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Ite):
            return x
        if isinstance(x, Add):
            stack.extend((x.right, x.left))
        elif isinstance(x, Mul):
            stack.append(x.arg)
        elif isinstance(x, App):
            stack.extend(reversed(x.args))
    return None


def _replace_subterm(t: Term, old: Term, new: Term) -> Term:
    if t == old:
        return new
    if isinstance(t, Add):
        return Add(_replace_subterm(t.left, old, new), _replace_subterm(t.right, old, new))
    if isinstance(t, Mul):
        return Mul(t.coef, _replace_subterm(t.arg, old, new))
    if isinstance(t, App):
        return App(t.fname, tuple(_replace_subterm(a, old, new) for a in t.args))
    return t


def lift_ites(build: Callable[..., Cond], *terms: Term) -> Cond:
    """Build ``build(*terms)`` with every term-level ite pulled up into a condition ite."""
    for i, t in enumerate(terms):
        ite = _find_ite(t)
        if ite is not None:
            then_terms = list(terms)
            else_terms = list(terms)
            then_terms[i] = _replace_subterm(t, ite, ite.then)
            else_terms[i] = _replace_subterm(t, ite, ite.other)
            return CondIte(
                atomize(ite.cond),
                lift_ites(build, *then_terms),
                lift_ites(build, *else_terms),
            )
    return build(*terms)


def atomize(c: Cond) -> Cond:
    """Rewrite every ``t1 >= t2`` into canonical ``lin >= 0`` atoms, lifting term ites.

    Leaves the boolean structure (including condition ites) in place.
    """
    if isinstance(c, Geq):
        return lift_ites(lambda a, b: ge0(linearize(a) - linearize(b)), c.left, c.right)
    if isinstance(c, ModEq):
        return lift_ites(lambda t: mod_eq(linearize(t), c.modulus, c.residue), c.term)
    if isinstance(c, And):
        return conj(*(atomize(a) for a in c.args))
    if isinstance(c, Or):
        return disj(*(atomize(a) for a in c.args))
    if isinstance(c, Not):
        inner = atomize(c.arg)
        if isinstance(inner, (Geq, BoolConst)):
            return negate_atom(inner)
        return negate(inner)
    if isinstance(c, CondIte):
        g = atomize(c.cond)
        if g == TRUE:
            return atomize(c.then)
        if g == FALSE:
            return atomize(c.other)
        return CondIte(g, atomize(c.then), atomize(c.other))
    if isinstance(c, (BoolConst, AppB)):
        return c
    raise TypeError(f"not a condition: {c!r}")


def _complementary(lits: Iterable[Cond]) -> bool:
    s = set(lits)
    return any(negate_atom(x) in s for x in s if isinstance(x, (Geq, ModEq, Not, AppB)))


def to_nnf(c: Cond) -> Cond:
    """Negation normal form over canonical literals.

    Literals are ``lin >= 0``, ``ModEq``, ``not ModEq``, ``AppB`` and ``not AppB``.
    """
    return _nnf(atomize(c), True)


def _nnf(c: Cond, pos: bool) -> Cond:
    if isinstance(c, BoolConst):
        return BoolConst(c.value == pos)
    if isinstance(c, Geq):
        return c if pos else negate_atom(c)
    if isinstance(c, (ModEq, AppB)):
        return c if pos else Not(c)
    if isinstance(c, Not):
        return _nnf(c.arg, not pos)
    if isinstance(c, And):
        parts = [_nnf(a, pos) for a in c.args]
        return conj(*parts) if pos else disj(*parts)
    if isinstance(c, Or):
        parts = [_nnf(a, pos) for a in c.args]
        return disj(*parts) if pos else conj(*parts)
    if isinstance(c, CondIte):
        g_pos = _nnf(c.cond, True)
        g_neg = _nnf(c.cond, False)
        return disj(conj(g_pos, _nnf(c.then, pos)), conj(g_neg, _nnf(c.other, pos)))
    raise TypeError(f"not a condition: {c!r}")


def dnf_cubes(c: Cond, cap: int = DEFAULT_CLAUSE_CAP) -> list[tuple]:
    """DNF as a list of literal tuples.  Contradictory cubes are dropped."""
    return _clauses(to_nnf(c), And, Or, cap, prune=True)


def cnf_clauses(c: Cond, cap: int = DEFAULT_CLAUSE_CAP) -> list[tuple]:
    return _clauses(to_nnf(c), Or, And, cap, prune=False)


def _clauses(c: Cond, inner, outer, cap: int, prune: bool) -> list[tuple]:
    # inner is the connective inside a clause (And for DNF), outer the one across clauses.
    if isinstance(c, BoolConst):
        # DNF: true = [()] , false = [] ; CNF: true = [], false = [()]
        unit = (inner is And) == c.value
        return [()] if unit else []
    if isinstance(c, outer):
        out: list[tuple] = []
        for a in c.args:
            out.extend(_clauses(a, inner, outer, cap, prune))
            if len(out) > cap:
                raise SizeLimitExceeded(f"normal form exceeds {cap} clauses")
        return _dedupe(out)
    if isinstance(c, inner):
        acc: list[tuple] = [()]
        for a in c.args:
            sub_clauses = _clauses(a, inner, outer, cap, prune)
            nxt = []
            for x in acc:
                for y in sub_clauses:
                    merged = tuple(dict.fromkeys(x + y))
                    if prune and _complementary(merged):
                        continue
                    nxt.append(merged)
                    if len(nxt) > cap:
                        raise SizeLimitExceeded(f"normal form exceeds {cap} clauses")
            acc = nxt
        return _dedupe(acc)
    return [(c,)]


def _dedupe(clauses: list[tuple]) -> list[tuple]:
    return list(dict.fromkeys(clauses))


def to_dnf(c: Cond, cap: int = DEFAULT_CLAUSE_CAP) -> Cond:
    return disj(*(conj(*cube) for cube in dnf_cubes(c, cap)))


def to_cnf(c: Cond, cap: int = DEFAULT_CLAUSE_CAP) -> Cond:
    return conj(*(disj(*cl) for cl in cnf_clauses(c, cap)))


def to_base(c: Cond) -> Cond:
    """Rewrite into the ``>=``/``and``/``not`` core (no or, ite, true, false)."""
    tautology = Geq(ONE, ZERO)

    def go(x):
        if isinstance(x, BoolConst):
            return tautology if x.value else Not(tautology)
        if isinstance(x, Geq):
            return Geq(_term_base(x.left), _term_base(x.right))
        if isinstance(x, And):
            parts = [go(a) for a in x.args]
            return reduce(lambda a, b: And((a, b)), parts) if parts else tautology
        if isinstance(x, Or):
            parts = [Not(go(a)) for a in x.args]
            if not parts:
                return Not(tautology)
            return Not(reduce(lambda a, b: And((a, b)), parts))
        if isinstance(x, Not):
            return Not(go(x.arg))
        if isinstance(x, CondIte):
            g = go(x.cond)
            t, e = go(x.then), go(x.other)
            return And((Not(And((g, Not(t)))), Not(And((Not(g), Not(e))))))
        if isinstance(x, (AppB, ModEq)):
            return x
        raise TypeError(f"not a condition: {x!r}")

    def _term_base(t):
        if isinstance(t, Ite):
            return Ite(go(t.cond), _term_base(t.then), _term_base(t.other))
        if isinstance(t, Add):
            return Add(_term_base(t.left), _term_base(t.right))
        if isinstance(t, Mul):
            return Mul(t.coef, _term_base(t.arg))
        if isinstance(t, App):
            return App(t.fname, tuple(_term_base(a) for a in t.args))
        return t

    return go(c)


def simplify(c: Cond) -> Cond:
    """Atomize and fold constants, keeping the boolean shape (no distribution)."""
    c = atomize(c)

    def go(x):
        if isinstance(x, And):
            parts = [go(a) for a in x.args]
            r = conj(*parts)
            if isinstance(r, And) and _complementary(r.args):
                return FALSE
            return r
        if isinstance(x, Or):
            parts = [go(a) for a in x.args]
            r = disj(*parts)
            if isinstance(r, Or) and _complementary(r.args):
                return TRUE
            return r
        if isinstance(x, Not):
            inner = go(x.arg)
            if isinstance(inner, (Geq, BoolConst)):
                return negate_atom(inner)
            return negate(inner)
        if isinstance(x, CondIte):
            g = go(x.cond)
            if g == TRUE:
                return go(x.then)
            if g == FALSE:
                return go(x.other)
            t, e = go(x.then), go(x.other)
            if t == e:
                return t
            if t == TRUE:
                return disj(g, e)
            if e == FALSE:
                return conj(g, t)
            return CondIte(g, t, e)
        return x

    return go(c)


def simplify_term(t: Term) -> Term:
    """Fold constants in conditions of ites and collapse ites with decided guards."""
    if isinstance(t, Ite):
        g = simplify(t.cond)
        if g == TRUE:
            return simplify_term(t.then)
        if g == FALSE:
            return simplify_term(t.other)
        a, b = simplify_term(t.then), simplify_term(t.other)
        if a == b:
            return a
        return Ite(g, a, b)
    if isinstance(t, Add):
        try:
            return linearize(t).to_term()
        except (NonLinear, UngroundedTerm):
            return Add(simplify_term(t.left), simplify_term(t.right))
    if isinstance(t, Mul):
        try:
            return linearize(t).to_term()
        except (NonLinear, UngroundedTerm):
            return Mul(t.coef, simplify_term(t.arg))
    return t


# ---------------------------------------------------------------------------
# Decision trees
# ---------------------------------------------------------------------------


class TreeKind(Enum):
    INT = "Int"
    BOOL = "Bool"


@dataclass(frozen=True, slots=True)
class LinExpr:
    """Dense ``coeffs . y + offset`` over a fixed parameter vector."""

    coeffs: tuple
    offset: int = 0

    def __call__(self, v: Sequence[int]) -> int:
        if len(v) != len(self.coeffs):
            raise ValueError(f"valuation has dimension {len(v)}, expected {len(self.coeffs)}")
        return sum(c * x for c, x in zip(self.coeffs, v)) + self.offset

    def __add__(self, other: "LinExpr") -> "LinExpr":
        return LinExpr(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.offset + other.offset)

    def scale(self, k: int) -> "LinExpr":
        return LinExpr(tuple(k * a for a in self.coeffs), k * self.offset)

    @property
    def is_constant(self) -> bool:
        return not any(self.coeffs)

    def to_lin(self, params: Sequence[str]) -> Lin:
        d: dict[str, int] = {}
        for p, c in zip(params, self.coeffs):
            d[p] = d.get(p, 0) + c
        return Lin.of(d, self.offset)

    def to_term(self, params: Sequence[str]) -> Term:
        return self.to_lin(params).to_term()

    @staticmethod
    def zero(dim: int) -> "LinExpr":
        return LinExpr((0,) * dim, 0)


@dataclass(frozen=True)
class DecisionTree:
    """Full binary tree in heap layout: node ``i`` has children ``2i+1`` and ``2i+2``.

    Internal nodes test ``nodes[i](y) >= 0`` and go to the left (true) child when it
    holds.  Leaves return ``nodes[i](y)`` (``INT``) or ``nodes[i](y) >= 0`` (``BOOL``).
    """

    height: int
    nodes: tuple
    kind: TreeKind = TreeKind.INT

    def __post_init__(self):
        if self.height < 1:
            raise ValueError("tree height must be positive")
        if len(self.nodes) != 2**self.height - 1:
            raise ValueError(
                f"height-{self.height} tree needs {2**self.height - 1} nodes, got {len(self.nodes)}"
            )
        dims = {len(n.coeffs) for n in self.nodes}
        if len(dims) > 1:
            raise ValueError("nodes disagree on dimension")

    @property
    def dim(self) -> int:
        return len(self.nodes[0].coeffs)

    @property
    def first_leaf(self) -> int:
        return 2 ** (self.height - 1) - 1

    def is_leaf(self, i: int) -> bool:
        return i >= self.first_leaf

    @staticmethod
    def children(i: int) -> tuple[int, int]:
        return 2 * i + 1, 2 * i + 2

    @classmethod
    def zeros(cls, height: int, dim: int, kind: TreeKind = TreeKind.INT) -> "DecisionTree":
        return cls(height, (LinExpr.zero(dim),) * (2**height - 1), kind)

    @classmethod
    def leaf(cls, expr: LinExpr, kind: TreeKind = TreeKind.INT) -> "DecisionTree":
        return cls(1, (expr,), kind)

    def pad(self, height: int) -> "DecisionTree":
        """Embed into a taller tree: the new root tests ``1 >= 0`` with this tree as its
        true child and an all-zero subtree as its false child."""
        t = self
        while t.height < height:
            guard = LinExpr((0,) * t.dim, 1)
            filler = DecisionTree.zeros(t.height, t.dim, t.kind)
            nodes = [guard]
            # interleave levels of the two subtrees into heap order
            for level in range(t.height):
                lo, hi = 2**level - 1, 2 ** (level + 1) - 1
                nodes.extend(t.nodes[lo:hi])
                nodes.extend(filler.nodes[lo:hi])
            t = DecisionTree(t.height + 1, tuple(nodes), t.kind)
        return t

    def eval(self, v: Sequence[int]):
        i = 0
        while not self.is_leaf(i):
            i = 2 * i + 1 if self.nodes[i](v) >= 0 else 2 * i + 2
        val = self.nodes[i](v)
        return val >= 0 if self.kind is TreeKind.BOOL else val


def eval_tree(dt: DecisionTree, v: Sequence[int]):
    return dt.eval(v)


def tree_to_term(dt: DecisionTree, params: Sequence[str]):
    """Nested ite over ``params``; guards that are constant are resolved statically."""

    def build(i: int):
        node = dt.nodes[i]
        if dt.is_leaf(i):
            if dt.kind is TreeKind.BOOL:
                return ge0(node.to_lin(params))
            return node.to_term(params)
        left, right = DecisionTree.children(i)
        if node.is_constant:
            return build(left) if node.offset >= 0 else build(right)
        g = ge0(node.to_lin(params))
        a, b = build(left), build(right)
        if a == b:
            return a
        if dt.kind is TreeKind.BOOL:
            return CondIte(g, a, b)
        return Ite(g, a, b)

    return build(0)

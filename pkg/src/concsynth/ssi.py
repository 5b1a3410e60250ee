"""Decision procedure for single-invocation specifications.

A spec is handled here when every occurrence of ``f`` is the same call
``f(x1, ..., xn)`` on distinct universally quantified variables, and no atom
contains more than one such call.  Replacing the call with a fresh ``z`` gives
``forall x. exists z. phi(z; x)``; in each atom ``z`` then appears with
coefficient +1 (a lower bound ``z >= t``) or -1 (an upper bound ``z <= t``).
The set of ``z`` satisfying ``phi`` is a union of intervals whose finite
endpoints are bound terms, so trying every bound term in turn (and 0 when
``phi`` holds for all ``z``) finds a value whenever one exists.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import clia, cooper
from .clia import (
    TRUE,
    App,
    Cond,
    Const,
    Geq,
    Ite,
    ModEq,
    Term,
    Var,
    conj,
    implies,
    negate,
)
from .errors import ConcSynthError, EngineInconclusive, NonUnitCoefficient, NoSolution, UnsupportedProblem
from .smt import SmtSession

log = logging.getLogger(__name__)

LOWER = "lower"
UPPER = "upper"


@dataclass(frozen=True)
class SsiNormalForm:
    """``phi(z; x)`` with the call replaced by ``z`` and every ``z``-atom a unit bound."""

    z: str
    formula: Cond
    atoms: tuple  # (direction, bound term over the spec variables)
    candidates: tuple  # bound terms to try, in order, before the default 0
    arg_vars: tuple  # the call's arguments, positionally matching the parameters
    params: tuple
    is_bool: bool = False


def _geq_nodes(c):
    return [n for n in clia.iter_nodes(c) if isinstance(n, (Geq, ModEq))]


def single_invocation(spec: Cond, fname: str) -> tuple | None:
    """The argument vector of the only call shape of ``fname`` if the spec qualifies, else None."""
    apps = clia.applications(spec, fname)
    if not apps:
        return None
    shapes = {a.args for a in apps}
    if len(shapes) != 1:
        return None
    (args,) = shapes
    if not all(isinstance(a, Var) for a in args):
        return None
    names = tuple(a.name for a in args)
    if len(set(names)) != len(names):
        return None
    used = clia.free_vars(spec)
    if not used <= set(names):
        return None
    for atom in _geq_nodes(spec):
        if len(clia.applications(atom, fname)) > 1:
            return None
    return names


def fresh_name(base: str, taken) -> str:
    taken = set(taken)
    name = base
    i = 0
    while name in taken:
        i += 1
        name = f"{base}{i}"
    return name


def ssi_normalize(spec: Cond, fname: str, params, is_bool: bool = False) -> SsiNormalForm:
    args = single_invocation(spec, fname)
    if args is None:
        raise UnsupportedProblem("specification is not single-invocation")
    z = fresh_name("z", clia.free_vars(spec) | set(params))
    if is_bool:
        formula = clia.substitute_apps(spec, fname, lambda _: Geq(Var(z), Const(0)))
        return SsiNormalForm(z, clia.atomize(formula), (), (), args, tuple(params), True)
    formula = clia.atomize(clia.substitute_apps(spec, fname, lambda _: Var(z)))
    atoms = []
    for node in clia.iter_nodes(formula):
        if isinstance(node, ModEq) and z in clia.free_vars(node):
            raise NonUnitCoefficient("the call appears under a modulo constraint")
        if not isinstance(node, Geq):
            continue
        lin = clia.atom_lin(node)
        a = lin.coeff(z)
        if a == 0:
            continue
        if abs(a) != 1:
            raise NonUnitCoefficient(f"coefficient {a} on the call in {node}")
        rest = lin.drop(z)
        atoms.append((LOWER, (-rest).to_term()) if a == 1 else (UPPER, rest.to_term()))
    atoms = list(dict.fromkeys(atoms))
    lowers = [t for d, t in atoms if d == LOWER]
    uppers = [t for d, t in atoms if d == UPPER]
    candidates = tuple(dict.fromkeys(lowers + uppers))
    return SsiNormalForm(z, formula, tuple(atoms), candidates, args, tuple(params))


def _plug(nf: SsiNormalForm, value) -> Cond:
    if nf.is_bool:
        return clia.substitute(nf.formula, {nf.z: Const(1 if value else -1)})
    return clia.substitute(nf.formula, {nf.z: value})


def existence_condition(nf: SsiNormalForm) -> Cond:
    """``exists z. phi(z; x)`` without the quantifier."""
    if nf.is_bool:
        return clia.disj(_plug(nf, True), _plug(nf, False))
    try:
        return cooper.eliminate(nf.z, nf.formula)
    except ConcSynthError as exc:
        log.info("falling back to candidate substitution for existence: %s", exc)
        return clia.disj(*(_plug(nf, t) for t in nf.candidates + (Const(0),)))


def ssi_check_exists(nf: SsiNormalForm, session: SmtSession, deadline: float | None = None) -> dict | None:
    """None when a solution exists, otherwise a valuation of the spec variables with no valid output."""
    gamma = existence_condition(nf)
    r = session.check_sat(negate(gamma), symbols=nf.arg_vars, deadline=deadline, presolve=True)
    if r.is_unsat:
        return None
    if r.is_sat:
        return {v: r.model.get(v, 0) for v in nf.arg_vars}
    raise EngineInconclusive(f"existence check returned unknown ({r.reason})")


def ssi_solve(nf: SsiNormalForm):
    """Candidate chain ``ite(phi(t1), t1, ite(phi(t2), t2, ... 0))`` over the parameters."""
    rename = {v: Var(p) for v, p in zip(nf.arg_vars, nf.params)}
    if nf.is_bool:
        return clia.simplify(clia.substitute(_plug(nf, True), rename))
    out: Term = Const(0)
    for t in reversed(nf.candidates):
        guard = clia.simplify(_plug(nf, t))
        if guard == TRUE:
            out = t
        elif guard != clia.FALSE:
            out = Ite(guard, t, out)
    return clia.simplify_term(clia.substitute(out, rename))


def solve_single_invocation(
    spec: Cond, fname: str, params, session: SmtSession, is_bool: bool = False, deadline=None
):
    nf = ssi_normalize(spec, fname, params, is_bool)
    witness = ssi_check_exists(nf, session, deadline)
    if witness is not None:
        raise NoSolution(
            f"no output value satisfies the spec at {witness}",
            witness=witness,
            evidence=("single-invocation", nf.formula, nf.z),
        )
    return ssi_solve(nf)


# ---------------------------------------------------------------------------
# Commutativity
# ---------------------------------------------------------------------------


def _is_swap_pair(c, fname):
    if not (isinstance(c, Geq) and isinstance(c.left, App) and isinstance(c.right, App)):
        return None
    l, r = c.left, c.right
    if l.fname != fname or r.fname != fname or len(l.args) != 2:
        return None
    a, b = l.args
    if not (isinstance(a, Var) and isinstance(b, Var)) or a == b or r.args != (b, a):
        return None
    return a.name, b.name


def split_commutative(spec: Cond, fname: str):
    """``(x1, x2, rest)`` when the spec conjoins ``f(x1,x2) = f(x2,x1)`` with ``rest``."""
    parts = list(spec.args) if isinstance(spec, clia.And) else [spec]
    pairs = {}
    for i, c in enumerate(parts):
        ab = _is_swap_pair(c, fname)
        if ab is not None:
            pairs[ab] = i
    for (a, b), i in pairs.items():
        j = pairs.get((b, a))
        if j is None:
            continue
        rest = conj(*(c for k, c in enumerate(parts) if k not in (i, j)))
        return a, b, rest
    return None


def commutative_subspec(spec: Cond, fname: str) -> tuple | None:
    """Spec for ``g`` with ``f(a,b) = ite(a >= b, g(a,b), g(b,a))``; None if not applicable."""
    split = split_commutative(spec, fname)
    if split is None:
        return None
    a, b, rest = split
    if not clia.free_vars(rest) <= {a, b}:
        return None
    call = App(fname, (Var(a), Var(b)))
    for app in clia.applications(rest, fname):
        if app.args not in ((Var(a), Var(b)), (Var(b), Var(a))):
            return None
    same = clia.substitute_apps(rest, fname, lambda _: call)
    swapped = clia.substitute(rest, {a: Var(b), b: Var(a)})
    swapped = clia.substitute_apps(swapped, fname, lambda _: call)
    sub = implies(Geq(Var(a), Var(b)), conj(same, swapped))
    if single_invocation(sub, fname) is None:
        return None
    return a, b, sub


def ssi_commutative(spec: Cond, fname: str, params, session: SmtSession, deadline=None) -> Term:
    found = commutative_subspec(spec, fname)
    if found is None:
        raise UnsupportedProblem("specification is not commutative single-invocation")
    a, b, sub = found
    # the sub-spec's call is g(a, b); solve it over the same parameter names
    g = solve_single_invocation(sub, fname, params, session, deadline=deadline)
    p1, p2 = params
    g_swapped = clia.substitute(g, {p1: Var(p2), p2: Var(p1)})
    if g == g_swapped:
        return g
    return Ite(Geq(Var(p1), Var(p2)), g, g_swapped)


def brute_force_exists(nf: SsiNormalForm, env: dict, lo: int = -10, hi: int = 10) -> bool:
    """Whether some z in ``[lo, hi]`` satisfies ``phi(z; env)``; test helper."""
    if nf.is_bool:
        return any(clia.eval_cond(_plug(nf, v), env) for v in (True, False))
    return any(clia.eval_cond(nf.formula, {**env, nf.z: z}) for z in range(lo, hi + 1))


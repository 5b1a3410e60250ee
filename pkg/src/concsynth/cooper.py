"""Cooper's method for eliminating one existentially quantified integer variable."""

from __future__ import annotations

import math
from functools import reduce

from . import clia
from .clia import (
    FALSE,
    TRUE,
    And,
    AppB,
    BoolConst,
    Cond,
    Geq,
    Lin,
    ModEq,
    Not,
    Or,
    conj,
    disj,
    ge0,
    linearize,
    mod_eq,
    negate_atom,
    to_nnf,
)
from .errors import NonLinearInVar, SizeLimitExceeded

# Upper bound on literal occurrences in an elimination result.
DEFAULT_CAP = 200_000


def _lcm(values) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


def map_literals(c: Cond, fn) -> Cond:
    """Rebuild an NNF condition with every literal replaced by ``fn(literal)``."""
    if isinstance(c, And):
        return conj(*(map_literals(a, fn) for a in c.args))
    if isinstance(c, Or):
        return disj(*(map_literals(a, fn) for a in c.args))
    return fn(c)


def literals(c: Cond) -> list:
    out = []
    stack = [c]
    while stack:
        x = stack.pop()
        if isinstance(x, (And, Or)):
            stack.extend(x.args)
        else:
            out.append(x)
    return out


def _count_literals(c: Cond) -> int:
    return len(literals(c))


def _lin_of(lit) -> tuple[Lin, int, int] | None:
    """``(lin, modulus, residue)`` for modulo literals, ``(lin, 0, 0)`` for ``lin >= 0``."""
    if isinstance(lit, Geq):
        return clia.atom_lin(lit), 0, 0
    if isinstance(lit, ModEq):
        return linearize(lit.term), lit.modulus, lit.residue
    if isinstance(lit, Not) and isinstance(lit.arg, ModEq):
        return linearize(lit.arg.term), lit.arg.modulus, lit.arg.residue
    return None


def eliminate(var: str, body: Cond, lower_bound_zero: bool = False, cap: int = DEFAULT_CAP) -> Cond:
    """Quantifier-free condition equivalent to ``exists var. body`` (with ``var >= 0`` if asked)."""
    if lower_bound_zero:
        body = conj(body, ge0(Lin.var(var)))
    f = to_nnf(body)
    coeffs = []
    for lit in literals(f):
        if isinstance(lit, AppB) or (isinstance(lit, Not) and isinstance(lit.arg, AppB)):
            if var in clia.free_vars(lit):
                raise NonLinearInVar(f"{var} occurs under an uninterpreted application")
            continue
        info = _lin_of(lit)
        if info is not None and info[0].coeff(var):
            coeffs.append(abs(info[0].coeff(var)))
    if not coeffs:
        return f
    l = _lcm(coeffs)

    # Scale so every occurrence of var has coefficient +-1; var now stands for l*var.
    def scale(lit):
        info = _lin_of(lit)
        if info is None:
            return lit
        lin, m, r = info
        a = lin.coeff(var)
        if a == 0:
            return lit
        k = l // abs(a)
        new = Lin.var(var, 1 if a > 0 else -1) + lin.drop(var).scale(k)
        if m == 0:
            return Geq(new.to_term(), clia.ZERO)
        atom = ModEq(new.to_term(), k * m, (k * r) % (k * m))
        return atom if isinstance(lit, ModEq) else Not(atom)

    g = map_literals(f, scale)
    if l > 1:
        g = conj(g, ModEq(clia.Var(var), l, 0))
    if g in (TRUE, FALSE):
        return g

    lower, upper, moduli = [], [], []
    for lit in literals(g):
        info = _lin_of(lit)
        if info is None:
            continue
        lin, m, _ = info
        a = lin.coeff(var)
        if a == 0:
            continue
        if m:
            moduli.append(m)
        elif a > 0:
            lower.append(-lin.drop(var) - Lin.constant(1))  # b < var
        else:
            upper.append(lin.drop(var) + Lin.constant(1))  # var < a
    delta = _lcm(moduli)
    lower = list(dict.fromkeys(lower))
    upper = list(dict.fromkeys(upper))
    use_lower = len(lower) <= len(upper)
    bounds = lower if use_lower else upper
    n_lits = _count_literals(g)
    if delta * (len(bounds) + 1) * n_lits > cap:
        raise SizeLimitExceeded(
            f"eliminating {var} needs {delta} x {len(bounds) + 1} copies of {n_lits} literals"
        )

    def substituted(value: Lin | None, infinite: bool):
        def fn(lit):
            info = _lin_of(lit)
            if info is None:
                return lit
            lin, m, r = info
            a = lin.coeff(var)
            if a == 0:
                return lit
            if m == 0 and infinite:
                # var -> -inf kills lower bounds; var -> +inf kills upper bounds
                return FALSE if (a > 0) == use_lower else TRUE
            new = lin.subst(var, value)
            if m == 0:
                return ge0(new)
            atom = mod_eq(new, m, r)
            return atom if isinstance(lit, ModEq) else negate_atom(atom)

        return map_literals(g, fn)

    sign = 1 if use_lower else -1
    parts = []
    for j in range(1, delta + 1):
        parts.append(substituted(Lin.constant(sign * j), True))
        for b in bounds:
            parts.append(substituted(b + Lin.constant(sign * j), False))
        if TRUE in parts:
            return TRUE
    return disj(*parts)


def eliminate_all(names, body: Cond, cap: int = DEFAULT_CAP) -> Cond:
    for v in names:
        body = eliminate(v, body, cap=cap)
    return body


def strip_modulo(c: Cond) -> Cond:
    """Weaken to pure CLIA: every modulo literal (either polarity) becomes true after NNF."""

    def fn(lit):
        if isinstance(lit, ModEq) or (isinstance(lit, Not) and isinstance(lit.arg, ModEq)):
            return TRUE
        return lit

    return map_literals(to_nnf(c), fn)


def has_modulo(c: Cond) -> bool:
    return any(isinstance(x, ModEq) for x in clia.iter_nodes(c))


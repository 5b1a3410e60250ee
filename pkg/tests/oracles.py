"""Independent reference implementations used by the tests.

Everything here works by brute force on small boxes: numpy evaluation of
formulas over whole grids, explicit-state loop simulation and exhaustive
search for quantifier witnesses.  None of it shares code with the engines
beyond the AST classes.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from concsynth import clia
from concsynth.clia import (
    Add,
    And,
    BoolConst,
    CondIte,
    Const,
    Geq,
    Ite,
    ModEq,
    Mul,
    Not,
    Or,
    Var,
)


def np_term(t, env):
    if isinstance(t, Const):
        return np.int64(t.value)
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Add):
        return np_term(t.left, env) + np_term(t.right, env)
    if isinstance(t, Mul):
        return t.coef * np_term(t.arg, env)
    if isinstance(t, Ite):
        return np.where(np_cond(t.cond, env), np_term(t.then, env), np_term(t.other, env))
    raise TypeError(f"cannot evaluate {t!r}")


def np_cond(c, env):
    if isinstance(c, BoolConst):
        return np.bool_(c.value)
    if isinstance(c, Geq):
        return np_term(c.left, env) >= np_term(c.right, env)
    if isinstance(c, ModEq):
        # numpy's mod takes the sign of the divisor, i.e. the mathematical residue
        return np.mod(np_term(c.term, env), c.modulus) == c.residue
    if isinstance(c, And):
        out = np.bool_(True)
        for a in c.args:
            out = out & np_cond(a, env)
        return out
    if isinstance(c, Or):
        out = np.bool_(False)
        for a in c.args:
            out = out | np_cond(a, env)
        return out
    if isinstance(c, Not):
        return ~np_cond(c.arg, env)
    if isinstance(c, CondIte):
        return np.where(np_cond(c.cond, env), np_cond(c.then, env), np_cond(c.other, env))
    raise TypeError(f"cannot evaluate {c!r}")


def grid(names, lo, hi):
    """Dense integer grid over ``names`` as a dict of flat arrays."""
    axes = np.meshgrid(*([np.arange(lo, hi + 1, dtype=np.int64)] * len(names)), indexing="ij")
    return {n: a.ravel() for n, a in zip(names, axes)}


# ---------------------------------------------------------------------------
# random formulas
# ---------------------------------------------------------------------------


def random_lin(rng: random.Random, names, coef=3, const=10) -> clia.Lin:
    return clia.Lin.of({n: rng.randint(-coef, coef) for n in names}, rng.randint(-const, const))


def random_atom(rng: random.Random, names, coef=3, const=10, modulo=False):
    lin = random_lin(rng, names, coef, const)
    if modulo and rng.random() < 0.25:
        m = rng.randint(2, 4)
        return ModEq(lin.to_term(), m, rng.randrange(m))
    return Geq(lin.to_term(), Const(0))


def random_formula(rng: random.Random, names, atoms=3, coef=3, const=10, modulo=False):
    leaves = [random_atom(rng, names, coef, const, modulo) for _ in range(atoms)]
    leaves = [Not(a) if rng.random() < 0.3 else a for a in leaves]
    while len(leaves) > 1:
        a = leaves.pop(rng.randrange(len(leaves)))
        b = leaves.pop(rng.randrange(len(leaves)))
        leaves.append((And if rng.random() < 0.5 else Or)((a, b)))
        if rng.random() < 0.15:
            leaves[-1] = Not(leaves[-1])
    return leaves[0]


# ---------------------------------------------------------------------------
# quantifier elimination by exhaustive search
# ---------------------------------------------------------------------------


def brute_exists(var, body, rest, lo=-10, hi=10, radius=300, lower_bound_zero=False):
    """For each grid point over ``rest``: does some ``var`` in [-radius, radius] satisfy ``body``?"""
    env = grid(rest, lo, hi)
    n = len(next(iter(env.values()))) if env else 1
    ks = np.arange(0 if lower_bound_zero else -radius, radius + 1, dtype=np.int64)
    full = {k: np.repeat(v, len(ks)) for k, v in env.items()}
    full[var] = np.tile(ks, n)
    sat = np.broadcast_to(np_cond(body, full), (n * len(ks),)).reshape(n, len(ks))
    return sat.any(axis=1), env


# ---------------------------------------------------------------------------
# loops
# ---------------------------------------------------------------------------


def local_closure_grid(pre, guard, shift, names, lo=-20, hi=20, steps=50):
    """Grid points reachable from ``pre`` by at most ``steps`` moves that stay inside ``guard``.

    Works backwards: ``x`` is reached iff ``pre(x)`` or there is ``k <= steps`` with
    ``pre(x - k*c)`` and ``guard`` holding at every point ``x - i*c`` for ``i <= k``.
    """
    env = grid(names, lo, hi)
    member = np.broadcast_to(np_cond(pre, env), env[names[0]].shape).copy()
    if all(c == 0 for c in shift):
        return member, env
    inside = np.ones_like(member)
    for k in range(steps + 1):
        back = {n: env[n] - k * c for n, c in zip(names, shift)}
        inside &= np.broadcast_to(np_cond(guard, back), member.shape)
        member |= inside & np.broadcast_to(np_cond(pre, back), member.shape)
    return member, env


def simulate(pre_points, step, limit=10_000):
    """Forward closure of a deterministic step function from a set of start tuples."""
    seen = set(pre_points)
    frontier = list(seen)
    while frontier and len(seen) < limit:
        x = frontier.pop()
        y = step(x)
        if y not in seen:
            seen.add(y)
            frontier.append(y)
    return seen


def box_points(names, lo, hi):
    return list(itertools.product(range(lo, hi + 1), repeat=len(names)))


def random_branch_system(rng: random.Random):
    """A single translational branch for closure checks: ``(names, pre, guard, shift)``.

    Pre is a box inside [-5, 5]^d, so every grid point in [-20, 20]^d reachable at all
    is reachable within 25 steps of a non-zero shift.
    """
    d = rng.randint(1, 3)
    names = [f"v{i}" for i in range(d)]
    shift = [rng.randint(-3, 3) for _ in names]
    if not any(shift):
        shift[rng.randrange(d)] = rng.choice([-1, 1])
    box = []
    for n in names:
        lo = rng.randint(-5, 5)
        hi = rng.randint(lo, 5)
        box += [Geq(Var(n), Const(lo)), Geq(Const(hi), Var(n))]
    guard = [random_atom(rng, names) for _ in range(rng.randint(1, 3))]
    guard = [Not(a) if rng.random() < 0.3 else a for a in guard]
    return names, clia.conj(*box), clia.conj(*guard), shift
